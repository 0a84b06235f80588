#pragma once

// Interface state machines (PRTESMs), their probabilistic timed automaton
// images, and the digital-clocks composition of a PTA network into a finite
// Markov decision process.

#include "prtspace/distributions.hpp"
#include "prtspace/probability.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prtspace {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// PRTESM

/// `pin/` is sent by the environment into the block, `/pin` leaves the block.
enum class Direction { ToBlock, FromBlock };

struct ParameterEvent {
    std::string pin;
    Direction direction = Direction::ToBlock;
    friend bool operator==(const ParameterEvent&, const ParameterEvent&) = default;
};

/// lower <= clock <= upper; an absent bound is unconstrained.
struct ClockInterval {
    std::string clock;
    std::optional<Tick> lower;
    std::optional<Tick> upper;
    friend bool operator==(const ClockInterval&, const ClockInterval&) = default;
};

struct PrtesmTransition {
    std::string source;
    std::string target;
    std::optional<ParameterEvent> trigger;  // nullopt: internal transition
    std::vector<std::string> resets;
    std::optional<ClockInterval> guard;
    std::optional<std::string> distribution;  // name of an accumulative delay table
    friend bool operator==(const PrtesmTransition&, const PrtesmTransition&) = default;
};

struct Prtesm {
    static constexpr std::string_view kInitial = "initial";

    std::string name;
    std::vector<std::string> states;
    std::vector<std::string> clocks;
    std::vector<PrtesmTransition> transitions;

    friend bool operator==(const Prtesm&, const Prtesm&) = default;
};

enum class Severity { Error, Warning };

struct ModelDiagnostic {
    enum class Code { DuplicateState, MissingInitial, UnknownState, UndeclaredClock, UnreachableState, BadGuard };
    Code code;
    Severity severity = Severity::Error;
    std::string message;
    std::optional<size_t> state;       // index into Prtesm::states
    std::optional<size_t> transition;  // index into Prtesm::transitions
};

/// Empty iff the machine is well formed: unique states, one `initial`
/// state, known endpoints, declared clocks, every state reachable.
std::vector<ModelDiagnostic> validate_prtesm(const Prtesm& machine);

// ---------------------------------------------------------------------------
// PTA

enum class ClockRel { Ge, Le };

struct ClockConstraint {
    std::string clock;
    ClockRel rel = ClockRel::Le;
    Tick value = 0;
    std::string constant;  // symbolic name for export, may be empty
    friend bool operator==(const ClockConstraint&, const ClockConstraint&) = default;
};

struct PtaUpdate {
    int location = 0;
    std::vector<std::string> resets;
    std::vector<std::pair<std::string, bool>> flags;
    friend bool operator==(const PtaUpdate&, const PtaUpdate&) = default;
};

struct PtaBranch {
    Probability prob;
    PtaUpdate update;
    friend bool operator==(const PtaBranch&, const PtaBranch&) = default;
};

struct PtaCommand {
    std::string label;  // empty: unsynchronized
    int location = 0;   // guard: location variable equals this
    std::vector<ClockConstraint> clock_guard;
    std::vector<PtaBranch> branches;
    friend bool operator==(const PtaCommand&, const PtaCommand&) = default;
};

struct PtaModule {
    std::string name;
    std::string location_var;
    int max_location = 0;
    std::vector<std::string> clocks;
    std::vector<std::string> flags;  // boolean, initially false
    std::vector<PtaCommand> commands;

    /// Labels used by this module's commands, sorted.
    std::vector<std::string> alphabet() const;

    friend bool operator==(const PtaModule&, const PtaModule&) = default;
};

struct TickConstant {
    std::string name;
    Tick value = 0;
    friend bool operator==(const TickConstant&, const TickConstant&) = default;
};

struct ProbConstant {
    std::string name;
    Probability value;
    friend bool operator==(const ProbConstant&, const ProbConstant&) = default;
};

struct PtaNetwork {
    std::vector<TickConstant> tick_constants;
    std::vector<ProbConstant> prob_constants;
    std::vector<PtaModule> modules;
    std::vector<std::string> sync_alphabet;  // sorted

    friend bool operator==(const PtaNetwork&, const PtaNetwork&) = default;
};

/// Throws ModelError describing the first violated network invariant.
void validate_network(const PtaNetwork& network);

// ---------------------------------------------------------------------------
// PRTESM -> PTA

/// One communication action kept by the transformation.
struct CommBinding {
    std::string pin;
    DelayCdf distribution;
    std::string trigger_label;     // label of the arming command; defaults to the pin
    std::string completion_label;  // label of the completion commands; empty = unsynchronized
};

struct TransformOptions {
    std::string tag;  // short module tag, e.g. "c2"; defaults to the sanitized machine name
    std::string init_label = "i";
};

/// A generated module plus the named constants its guards and probabilities use.
struct TransformResult {
    PtaModule module;
    std::vector<TickConstant> tick_constants;
    std::vector<ProbConstant> prob_constants;
};

/// Location layout of a generated module, in order: 0 = initial, then the
/// kept initialization states, then per (distribution, completion label)
/// group a pending location followed by one location per support tick
/// (omitted for point masses), then one terminal location that raises
/// `flag_<tag>`.
TransformResult prtesm_to_pta(const Prtesm& machine, std::span<const CommBinding> bindings,
                              const TransformOptions& options = {});

/// Convenience form with default labels.
TransformResult prtesm_to_pta(const Prtesm& machine, const std::vector<std::string>& comm_actions,
                              const std::map<std::string, DelayCdf>& distributions,
                              const TransformOptions& options = {});

/// Collects module constants and computes the synchronization alphabet.
PtaNetwork assemble_network(std::vector<TransformResult> parts);

/// Non-alphanumeric characters become '_'.
std::string sanitize_identifier(std::string_view text);

// ---------------------------------------------------------------------------
// Digital-clocks MDP

/// How clock windows on commands are read in the digital semantics.
///  - Deadline: a command whose guard bounds a clock from above fires exactly
///    when that clock reaches the bound, and enabled commands are urgent (time
///    only advances when no command can fire). A delay branch guarded by
///    [t_prev, t_i] then completes at t_i, so reachability follows the delay
///    table step by step.
///  - Window: textbook semantics; a command may fire at any integer instant
///    inside its window and time may always advance.
enum class TimingSemantics { Deadline, Window };

struct ComposeOptions {
    TimingSemantics semantics = TimingSemantics::Deadline;
    /// Clocks that cannot influence any future guard before their next reset
    /// are kept at 0.
    bool reduce_inactive_clocks = true;
    size_t max_states = 20'000'000;
};

using StateId = std::uint32_t;

struct MdpBranch {
    Probability prob;
    double prob_value = 0.0;
    StateId target = 0;
};

struct MdpAction {
    std::string label;
    bool tick = false;  // advances time by one tick; other actions take zero time
    std::vector<MdpBranch> branches;
};

struct DigitalMdp {
    std::vector<std::string> variables;
    std::vector<std::int32_t> valuations;  // state-major, variables.size() per state
    std::vector<std::vector<MdpAction>> actions;
    StateId initial = 0;

    size_t state_count() const { return actions.size(); }
    std::span<const std::int32_t> valuation(StateId s) const {
        return {valuations.data() + static_cast<size_t>(s) * variables.size(), variables.size()};
    }
    size_t transition_count() const;
    std::string dump() const;
};

/// Checks branch probabilities, successor ids and the absence of cycles made
/// only of zero-duration actions. Throws ModelError.
void validate_mdp(const DigitalMdp& mdp);

/// Per clock, one more than the largest constant it is compared against.
std::map<std::string, Tick> saturate_clock_bound(const PtaNetwork& network);

DigitalMdp compose(const PtaNetwork& network, const ComposeOptions& options = {});

}  // namespace prtspace
