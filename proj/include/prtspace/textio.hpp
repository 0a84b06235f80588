#pragma once

// The `.prt` model language (distributions, PRTESMs, a network of module
// instances, queries and a simulation scenario) and the PRISM-dialect PTA
// text used for export. The grammar is documented in docs/model-format.md.

#include "prtspace/checker.hpp"
#include "prtspace/distributions.hpp"
#include "prtspace/expr.hpp"
#include "prtspace/model.hpp"
#include "prtspace/sim.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prtspace {

struct SourceSpan {
    std::size_t offset = 0, length = 0;
    std::size_t line = 1, column = 1;  // 1-based, of the first byte
};

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    SourceSpan span;

    /// "file:line:col: error: message"
    std::string format(std::string_view file) const;
};

struct NamedDistribution {
    std::string name;
    DelayCdf cdf;
    friend bool operator==(const NamedDistribution&, const NamedDistribution&) = default;
};

struct ActionDecl {
    std::string pin;
    std::optional<std::string> delay;  // distribution; defaults to the one on the machine's transition
    std::optional<std::string> sync;   // arming label; defaults to the pin
    std::optional<std::string> done;   // completion label; default unsynchronized
    friend bool operator==(const ActionDecl&, const ActionDecl&) = default;
};

struct ModuleDecl {
    std::string tag;
    std::string machine;
    std::vector<ActionDecl> actions;
    friend bool operator==(const ModuleDecl&, const ModuleDecl&) = default;
};

struct NetworkDecl {
    std::optional<TimingSemantics> semantics;
    std::vector<ModuleDecl> modules;
    std::optional<Expr> target;
    friend bool operator==(const NetworkDecl&, const NetworkDecl&) = default;
};

enum class QueryMode { Max, Min, Both };

struct QueryDecl {
    std::string name;
    Tick bound = 0;
    QueryMode mode = QueryMode::Max;
    std::optional<Expr> target;  // defaults to the network target
    std::optional<Probability> reference;  // externally published value to compare against
    friend bool operator==(const QueryDecl&, const QueryDecl&) = default;
};

struct ModelDocument {
    int version = 1;
    std::vector<NamedDistribution> distributions;
    std::vector<Prtesm> machines;
    std::optional<NetworkDecl> network;
    std::vector<QueryDecl> queries;
    std::optional<ScenarioConfig> scenario;

    const NamedDistribution* find_distribution(std::string_view name) const;
    const Prtesm* find_machine(std::string_view name) const;
    const QueryDecl* find_query(std::string_view name) const;
    /// The query's target, falling back to the network target.
    std::optional<Expr> query_target(const QueryDecl& q) const;

    friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

struct ParseResult {
    std::optional<ModelDocument> document;  // present iff no error diagnostics
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return document.has_value(); }
};

/// Total: never throws on any input; failures come back as diagnostics.
ParseResult parse_model(std::string_view text);

/// Canonical text; parse_model(print_model(d)).document == d.
std::string print_model(const ModelDocument& doc);

/// Transforms every module instance and assembles the network. Throws
/// ModelError when the document has no network or a reference is dangling.
PtaNetwork build_network(const ModelDocument& doc);

/// Accepts a tick count or a number with an `s`, `ms` or `us` suffix; the
/// value must be a whole number of ticks. Throws NumberFormatError.
Tick parse_time_literal(std::string_view text);

/// PRISM `pta` text in the layout of the published PTA listing.
std::string export_prism(const PtaNetwork& network);

class PrismFormatError : public std::runtime_error {
public:
    PrismFormatError(const std::string& message, std::size_t line) : std::runtime_error(message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Reads back the subset export_prism writes.
PtaNetwork read_prism(std::string_view text);

}  // namespace prtspace
