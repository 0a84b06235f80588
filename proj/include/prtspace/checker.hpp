#pragma once

// Bounded reachability P=?[F<=T target] on a digital-clocks MDP.

#include "prtspace/distributions.hpp"
#include "prtspace/expr.hpp"
#include "prtspace/model.hpp"

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace prtspace {

class CheckError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptMode { Max, Min };

struct ReachabilityQuery {
    Expr target = Expr::constant(false);
    Tick bound = 0;
    OptMode mode = OptMode::Max;
};

struct ReachabilityResult {
    Probability probability;
    std::size_t iterations = 0;       // time layers evaluated
    std::size_t states_explored = 0;  // (state, elapsed time) pairs visited
};

enum class Arithmetic { Exact, Double };

struct CheckOptions {
    Tick horizon_cap = 100000;
    Arithmetic arithmetic = Arithmetic::Exact;
};

/// Horizon cap from PRTSPACE_HORIZON_CAP, or 100000 ticks.
Tick default_horizon_cap();

/// Exact finite-horizon value iteration over the time-unfolded MDP. Target
/// states are worth 1; the tick action costs one time unit and every other
/// action none; a tick past the bound and a deadlock are worth 0.
ReachabilityResult check_bounded_reachability(const DigitalMdp& mdp, const ReachabilityQuery& query,
                                              const CheckOptions& options = {});

struct DensityPoint {
    Tick bound = 0;
    Probability cumulative;
    Probability density;  // cumulative minus the previous grid point's cumulative
};

struct DensityResult {
    std::vector<DensityPoint> points;
    /// Bin i covers ticks (T_{i-1}, T_i]; the first bin starts at tick 0.
    std::vector<HistogramBin> bins() const;
};

/// Cumulative reachability at each grid bound (ascending). One forward
/// exploration up to the last bound serves every grid point.
DensityResult density_sweep(const DigitalMdp& mdp, const Expr& target, const std::vector<Tick>& grid,
                            OptMode mode = OptMode::Max, const CheckOptions& options = {});

/// P(F<=T target) for every T in [0, max_bound] from one pass over the whole
/// state space (the MDP is time-homogeneous, so the value depends only on
/// the remaining time). Cost grows with states x max_bound, so it suits small
/// models; large ones should use density_sweep on a grid.
std::vector<Probability> reachability_profile(const DigitalMdp& mdp, const Expr& target, Tick max_bound,
                                              OptMode mode = OptMode::Max, const CheckOptions& options = {});

/// (Min, Max) at one bound; equal values certify scheduler independence.
std::pair<Probability, Probability> min_max_gap(const DigitalMdp& mdp, const Expr& target, Tick bound,
                                                const CheckOptions& options = {});

}  // namespace prtspace
