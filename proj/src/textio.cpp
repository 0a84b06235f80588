#include "prtspace/textio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace prtspace {

std::string Diagnostic::format(std::string_view file) const {
    std::ostringstream out;
    out << file << ":" << span.line << ":" << span.column << ": "
        << (severity == Severity::Error ? "error" : "warning") << ": " << message;
    return out.str();
}

const NamedDistribution* ModelDocument::find_distribution(std::string_view name) const {
    for (const auto& d : distributions)
        if (d.name == name) return &d;
    return nullptr;
}

const Prtesm* ModelDocument::find_machine(std::string_view name) const {
    for (const auto& m : machines)
        if (m.name == name) return &m;
    return nullptr;
}

const QueryDecl* ModelDocument::find_query(std::string_view name) const {
    for (const auto& q : queries)
        if (q.name == name) return &q;
    return nullptr;
}

std::optional<Expr> ModelDocument::query_target(const QueryDecl& q) const {
    if (q.target) return q.target;
    if (network && network->target) return network->target;
    return std::nullopt;
}

Tick parse_time_literal(std::string_view text) {
    size_t split = text.size();
    while (split > 0 && std::isalpha(static_cast<unsigned char>(text[split - 1]))) --split;
    std::string_view number = text.substr(0, split), unit = text.substr(split);
    Probability scale;
    if (unit.empty()) scale = 1;
    else if (unit == "s") scale = 10000;
    else if (unit == "ms") scale = 10;
    else if (unit == "us") scale = Probability(1, 100);
    else throw NumberFormatError("unknown time unit '" + std::string(unit) + "'");
    if (number.empty() || number.front() == '-' || number.front() == '+')
        throw NumberFormatError("malformed time '" + std::string(text) + "'");
    Probability value = parse_probability(number) * scale;
    value.canonicalize();
    if (value.get_den() != 1) throw NumberFormatError("time '" + std::string(text) + "' is not a whole number of ticks");
    if (value > Probability(std::int64_t{1} << 40)) throw NumberFormatError("time '" + std::string(text) + "' is too large");
    return static_cast<Tick>(value.get_num().get_si());
}

// ---------------------------------------------------------------------------
// Scenario keys

namespace {

struct ScenarioKey {
    const char* name;
    double ScenarioConfig::*number = nullptr;
    bool ScenarioConfig::*flag = nullptr;
};

const std::vector<ScenarioKey>& scenario_keys() {
    static const std::vector<ScenarioKey> keys = {
        {"hall_width", &ScenarioConfig::hall_width},
        {"hall_depth", &ScenarioConfig::hall_depth},
        {"robot_width", &ScenarioConfig::robot_width},
        {"robot_depth", &ScenarioConfig::robot_depth},
        {"track_length", &ScenarioConfig::track_length},
        {"track_origin_x", &ScenarioConfig::track_origin_x},
        {"robot_max_speed", &ScenarioConfig::robot_max_speed},
        {"normal_accel", &ScenarioConfig::normal_accel},
        {"normal_decel", &ScenarioConfig::normal_decel},
        {"yellow_decel", &ScenarioConfig::yellow_decel},
        {"red_decel", &ScenarioConfig::red_decel},
        {"yellow_speed", &ScenarioConfig::yellow_speed},
        {"creep_speed", &ScenarioConfig::creep_speed},
        {"creep_zone", &ScenarioConfig::creep_zone},
        {"yellow_threshold", &ScenarioConfig::yellow_threshold},
        {"red_threshold", &ScenarioConfig::red_threshold},
        {"physics_step", &ScenarioConfig::physics_step},
        {"poll_period", &ScenarioConfig::poll_period},
        {"poll_phase", &ScenarioConfig::poll_phase},
        {"reaction_delay", &ScenarioConfig::reaction_delay},
        {"edge_distance", nullptr, &ScenarioConfig::edge_distance},
        {"human_enabled", nullptr, &ScenarioConfig::human_enabled},
        {"human_speed", &ScenarioConfig::human_speed},
        {"human_width", &ScenarioConfig::human_width},
        {"human_depth", &ScenarioConfig::human_depth},
        {"human_entry_time", &ScenarioConfig::human_entry_time},
        {"human_entry_distance", &ScenarioConfig::human_entry_distance},
        {"human_entry_offset_y", &ScenarioConfig::human_entry_offset_y},
        {"time_cap", &ScenarioConfig::time_cap},
    };
    return keys;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceSpan span;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
public:
    Lexer(std::string_view src, std::vector<Diagnostic>& diags) : src_(src), diags_(diags) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (pos_ >= src_.size()) break;
            size_t start = pos_;
            SourceSpan sp = here();
            char c = src_[pos_];
            if (ident_start(c)) {
                while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
                out.push_back({Tok::Ident, std::string(src_.substr(start, pos_ - start)), finish(sp)});
            } else if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
                while (pos_ < src_.size() && (digit(src_[pos_]) || src_[pos_] == '.')) advance();
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                    size_t k = pos_ + 1;
                    if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
                    if (k < src_.size() && digit(src_[k])) {
                        while (pos_ < k) advance();
                        while (pos_ < src_.size() && digit(src_[pos_])) advance();
                    }
                }
                // unit suffix (15ms, 0.46s)
                while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) advance();
                out.push_back({Tok::Number, std::string(src_.substr(start, pos_ - start)), finish(sp)});
            } else {
                static const char* two[] = {"->", "<=", ">=", "==", "!=", "&&", "||"};
                std::string text;
                for (const char* t : two)
                    if (src_.substr(pos_, 2) == t) text = t;
                if (text.empty() && std::string_view("{}()[];,:=<>!&|/%-+").find(c) != std::string_view::npos)
                    text = std::string(1, c);
                if (text.empty()) {
                    advance();
                    diags_.push_back({Severity::Error, "unexpected character " + describe(c), finish(sp)});
                    continue;
                }
                for (size_t i = 0; i < text.size(); ++i) advance();
                out.push_back({Tok::Punct, text, finish(sp)});
            }
        }
        out.push_back({Tok::End, "", here()});
        return out;
    }

private:
    static std::string describe(char c) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isprint(u)) return std::string("'") + c + "'";
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%02X", u);
        return buf;
    }
    SourceSpan here() const { return {pos_, 0, line_, col_}; }
    SourceSpan finish(SourceSpan sp) const {
        sp.length = pos_ - sp.offset;
        return sp;
    }
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::vector<Diagnostic>& diags_;
    size_t pos_ = 0, line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

struct SyntaxError {
    std::string message;
    SourceSpan span;
};

struct MachineSpans {
    SourceSpan name;
    std::vector<SourceSpan> states, transitions;
    std::vector<std::optional<SourceSpan>> delays;
};
struct ModuleSpans {
    SourceSpan tag, machine;
    std::vector<SourceSpan> actions;
};
struct Spans {
    std::vector<SourceSpan> distributions;
    std::vector<MachineSpans> machines;
    SourceSpan network;
    std::vector<ModuleSpans> modules;
    std::optional<SourceSpan> network_target;
    std::vector<SourceSpan> queries;
    std::vector<std::optional<SourceSpan>> query_targets;
    SourceSpan scenario;
};

const std::set<std::string> kTopLevel = {"version", "distribution", "prtesm", "network", "query", "scenario"};

class Parser {
public:
    Parser(std::string_view src, std::vector<Token> toks, std::vector<Diagnostic>& diags)
        : src_(src), toks_(std::move(toks)), diags_(diags) {}

    ModelDocument doc;
    Spans spans;
    bool syntax_errors = false;

    void run() {
        if (peek().kind == Tok::End) {
            error({"expected top-level declaration", peek().span});
            return;
        }
        bool first = true;
        while (peek().kind != Tok::End) {
            size_t before = pos_;
            try {
                top_level(first);
            } catch (const SyntaxError& e) {
                error(e);
                if (pos_ == before) ++pos_;
                recover();
            }
            first = false;
        }
    }

private:
    const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() {
        const Token& t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    bool is(std::string_view punct) const { return peek().kind == Tok::Punct && peek().text == punct; }
    bool is_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }
    static std::string show(const Token& t) {
        if (t.kind == Tok::End) return "end of input";
        return "'" + t.text + "'";
    }
    [[noreturn]] void fail(const std::string& expected) const {
        throw SyntaxError{"expected " + expected + ", found " + show(peek()), peek().span};
    }
    void expect(std::string_view punct) {
        if (!is(punct)) fail("'" + std::string(punct) + "'");
        next();
    }
    void expect_word(std::string_view w) {
        if (!is_word(w)) fail("'" + std::string(w) + "'");
        next();
    }
    const Token& ident(const std::string& what) {
        if (peek().kind != Tok::Ident) fail(what);
        return next();
    }
    void error(const SyntaxError& e) {
        syntax_errors = true;
        diags_.push_back({Severity::Error, e.message, e.span});
    }
    void recover() {
        int depth = 0;
        while (peek().kind != Tok::End) {
            if (depth <= 0 && peek().kind == Tok::Ident && kTopLevel.count(peek().text)) {
                const Token& prev = toks_[pos_ - 1];
                if (prev.kind == Tok::Punct && (prev.text == "}" || prev.text == ";")) return;
            }
            if (is("{")) ++depth;
            if (is("}")) --depth;
            next();
        }
    }

    void top_level(bool first) {
        const Token& t = peek();
        if (t.kind != Tok::Ident || !kTopLevel.count(t.text)) fail("top-level declaration");
        if (t.text == "version") {
            if (!first) throw SyntaxError{"'version' must be the first declaration", t.span};
            next();
            const Token& v = next();
            if (v.kind != Tok::Number || v.text != "1")
                throw SyntaxError{"unsupported model version " + show(v) + " (this reader knows version 1)", v.span};
            expect(";");
            doc.version = 1;
        } else if (t.text == "distribution") {
            distribution();
        } else if (t.text == "prtesm") {
            machine();
        } else if (t.text == "network") {
            network();
        } else if (t.text == "query") {
            query();
        } else {
            scenario();
        }
    }

    Tick time_value() {
        const Token& t = peek();
        if (t.kind != Tok::Number) fail("time value");
        next();
        try {
            return parse_time_literal(t.text);
        } catch (const NumberFormatError& e) {
            throw SyntaxError{e.what(), t.span};
        }
    }

    Probability probability_value() {
        const Token& t = peek();
        if (t.kind != Tok::Number) fail("probability");
        next();
        std::string text = t.text;
        SourceSpan sp = t.span;
        if (is("%")) {
            text += next().text;
        } else if (is("/")) {
            next();
            const Token& d = peek();
            if (d.kind != Tok::Number) fail("denominator");
            next();
            text += "/" + d.text;
        }
        try {
            Probability p = parse_probability(text);
            if (!is_unit_interval(p)) throw SyntaxError{"probability " + text + " lies outside [0,1]", sp};
            return p;
        } catch (const NumberFormatError& e) {
            throw SyntaxError{e.what(), sp};
        }
    }

    void distribution() {
        next();
        const Token& name = ident("distribution name");
        expect("{");
        std::vector<CdfPoint> points;
        while (!is("}")) {
            Tick t = time_value();
            expect(":");
            Probability p = probability_value();
            points.push_back({t, p});
            if (!is("}")) expect(";");
        }
        SourceSpan close = peek().span;
        next();
        try {
            doc.distributions.push_back({name.text, DelayCdf(points)});
            spans.distributions.push_back(name.span);
        } catch (const DistributionError& e) {
            throw SyntaxError{"distribution '" + name.text + "': " + e.what(), points.empty() ? close : name.span};
        }
    }

    std::vector<std::string> name_list(const std::string& what, std::vector<SourceSpan>* out_spans = nullptr) {
        std::vector<std::string> names;
        do {
            const Token& t = ident(what);
            names.push_back(t.text);
            if (out_spans) out_spans->push_back(t.span);
        } while (is(",") && (next(), true));
        return names;
    }

    void machine() {
        next();
        Prtesm m;
        MachineSpans ms;
        const Token& name = ident("machine name");
        m.name = name.text;
        ms.name = name.span;
        expect("{");
        while (!is("}")) {
            if (is_word("states")) {
                next();
                auto names = name_list("state name", &ms.states);
                m.states.insert(m.states.end(), names.begin(), names.end());
                expect(";");
            } else if (is_word("clocks")) {
                next();
                auto names = name_list("clock name");
                m.clocks.insert(m.clocks.end(), names.begin(), names.end());
                expect(";");
            } else if (peek().kind == Tok::Ident) {
                PrtesmTransition t;
                SourceSpan sp = peek().span;
                t.source = next().text;
                expect("->");
                t.target = ident("target state").text;
                std::optional<SourceSpan> delay_span;
                while (!is(";")) {
                    if (is_word("on")) {
                        next();
                        if (is("/")) {
                            next();
                            t.trigger = ParameterEvent{ident("pin name").text, Direction::FromBlock};
                        } else {
                            std::string pin = ident("pin name").text;
                            expect("/");
                            t.trigger = ParameterEvent{pin, Direction::ToBlock};
                        }
                    } else if (is_word("guard")) {
                        next();
                        ClockInterval g;
                        g.clock = ident("clock name").text;
                        if (is_word("in")) {
                            next();
                            expect("[");
                            g.lower = time_value();
                            expect(",");
                            g.upper = time_value();
                            expect("]");
                        } else if (is("<=")) {
                            next();
                            g.upper = time_value();
                        } else if (is(">=")) {
                            next();
                            g.lower = time_value();
                        } else {
                            fail("'in', '<=' or '>='");
                        }
                        t.guard = g;
                    } else if (is_word("reset")) {
                        next();
                        auto names = name_list("clock name");
                        t.resets.insert(t.resets.end(), names.begin(), names.end());
                    } else if (is_word("delay")) {
                        next();
                        delay_span = peek().span;
                        t.distribution = ident("distribution name").text;
                    } else {
                        fail("'on', 'guard', 'reset', 'delay' or ';'");
                    }
                }
                next();
                m.transitions.push_back(std::move(t));
                ms.transitions.push_back(sp);
                ms.delays.push_back(delay_span);
            } else {
                fail("'states', 'clocks', a transition or '}'");
            }
        }
        next();
        doc.machines.push_back(std::move(m));
        spans.machines.push_back(std::move(ms));
    }

    // Raw text from the current token up to (not including) the next ';'.
    std::pair<Expr, SourceSpan> expression() {
        size_t start = peek().span.offset;
        SourceSpan sp = peek().span;
        while (!is(";") && peek().kind != Tok::End) next();
        if (peek().kind == Tok::End) fail("';'");
        size_t end = peek().span.offset;
        sp.length = end - start;
        std::string_view text = src_.substr(start, end - start);
        try {
            return {parse_expr(text), sp};
        } catch (const ExprError& e) {
            SourceSpan at = sp;
            size_t off = std::min(e.offset(), text.size());
            for (size_t i = 0; i < off; ++i) {
                if (text[i] == '\n') {
                    ++at.line;
                    at.column = 1;
                } else {
                    ++at.column;
                }
            }
            at.offset = start + off;
            at.length = 0;
            throw SyntaxError{std::string("in expression: ") + e.what(), at};
        }
    }

    void network() {
        SourceSpan sp = next().span;
        if (doc.network) throw SyntaxError{"only one network may be declared", sp};
        NetworkDecl net;
        spans.network = sp;
        expect("{");
        while (!is("}")) {
            if (is_word("semantics")) {
                next();
                const Token& s = ident("'deadline' or 'window'");
                if (s.text == "deadline") net.semantics = TimingSemantics::Deadline;
                else if (s.text == "window") net.semantics = TimingSemantics::Window;
                else throw SyntaxError{"expected 'deadline' or 'window', found " + show(s), s.span};
                expect(";");
            } else if (is_word("module")) {
                next();
                ModuleDecl m;
                ModuleSpans ms;
                const Token& tag = ident("module tag");
                m.tag = tag.text;
                ms.tag = tag.span;
                expect(":");
                const Token& mach = ident("machine name");
                m.machine = mach.text;
                ms.machine = mach.span;
                expect("{");
                while (!is("}")) {
                    expect_word("action");
                    ActionDecl a;
                    const Token& pin = ident("pin name");
                    a.pin = pin.text;
                    ms.actions.push_back(pin.span);
                    while (!is(";")) {
                        if (is_word("delay")) {
                            next();
                            a.delay = ident("distribution name").text;
                        } else if (is_word("sync")) {
                            next();
                            a.sync = ident("label").text;
                        } else if (is_word("done")) {
                            next();
                            a.done = ident("label").text;
                        } else {
                            fail("'delay', 'sync', 'done' or ';'");
                        }
                    }
                    next();
                    m.actions.push_back(std::move(a));
                }
                next();
                net.modules.push_back(std::move(m));
                spans.modules.push_back(std::move(ms));
            } else if (is_word("target")) {
                next();
                auto [e, esp] = expression();
                net.target = e;
                spans.network_target = esp;
                expect(";");
            } else {
                fail("'semantics', 'module', 'target' or '}'");
            }
        }
        next();
        doc.network = std::move(net);
    }

    void query() {
        next();
        QueryDecl q;
        const Token& name = ident("query name");
        q.name = name.text;
        std::optional<SourceSpan> target_span;
        bool have_bound = false;
        expect("{");
        while (!is("}")) {
            if (is_word("bound")) {
                next();
                q.bound = time_value();
                have_bound = true;
            } else if (is_word("mode")) {
                next();
                const Token& m = ident("'max', 'min' or 'both'");
                if (m.text == "max") q.mode = QueryMode::Max;
                else if (m.text == "min") q.mode = QueryMode::Min;
                else if (m.text == "both") q.mode = QueryMode::Both;
                else throw SyntaxError{"expected 'max', 'min' or 'both', found " + show(m), m.span};
            } else if (is_word("target")) {
                next();
                auto [e, esp] = expression();
                q.target = e;
                target_span = esp;
            } else if (is_word("reference")) {
                next();
                q.reference = probability_value();
            } else {
                fail("'bound', 'mode', 'target', 'reference' or '}'");
            }
            expect(";");
        }
        if (!have_bound) throw SyntaxError{"query '" + q.name + "' has no bound", name.span};
        next();
        doc.queries.push_back(std::move(q));
        spans.queries.push_back(name.span);
        spans.query_targets.push_back(target_span);
    }

    void scenario() {
        SourceSpan sp = next().span;
        if (doc.scenario) throw SyntaxError{"only one scenario may be declared", sp};
        spans.scenario = sp;
        ScenarioConfig config;
        std::set<std::string> seen;
        expect("{");
        while (!is("}")) {
            const Token& key = ident("scenario key");
            auto it = std::find_if(scenario_keys().begin(), scenario_keys().end(),
                                   [&](const ScenarioKey& k) { return key.text == k.name; });
            if (it == scenario_keys().end()) throw SyntaxError{"unknown scenario key '" + key.text + "'", key.span};
            if (!seen.insert(key.text).second)
                throw SyntaxError{"scenario key '" + key.text + "' given twice", key.span};
            expect("=");
            if (it->flag) {
                const Token& v = ident("'true' or 'false'");
                if (v.text != "true" && v.text != "false")
                    throw SyntaxError{"expected 'true' or 'false', found " + show(v), v.span};
                config.*(it->flag) = v.text == "true";
            } else {
                bool negative = false;
                if (is("-") || is("+")) negative = next().text == "-";
                const Token& v = peek();
                if (v.kind != Tok::Number) fail("number");
                next();
                char* end = nullptr;
                double value = std::strtod(v.text.c_str(), &end);
                if (end != v.text.c_str() + v.text.size() || !std::isfinite(value))
                    throw SyntaxError{"malformed number '" + v.text + "'", v.span};
                config.*(it->number) = negative ? -value : value;
            }
            expect(";");
        }
        next();
        doc.scenario = config;
    }

    std::string_view src_;
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::vector<Diagnostic>& diags_;
};

// ---------------------------------------------------------------------------
// Resolution

std::string tag_of(const ModuleDecl& m) { return sanitize_identifier(m.tag); }

class Resolver {
public:
    Resolver(const ModelDocument& doc, const Spans& spans, std::vector<Diagnostic>& diags)
        : doc_(doc), spans_(spans), diags_(diags) {}

    void run() {
        duplicates();
        machines();
        bool network_ok = network();
        targets(network_ok);
        scenario();
    }

private:
    void error(std::string message, SourceSpan span, Severity sev = Severity::Error) {
        diags_.push_back({sev, std::move(message), span});
    }

    void duplicates() {
        std::map<std::string, int> seen;
        for (size_t i = 0; i < doc_.distributions.size(); ++i)
            if (seen[doc_.distributions[i].name]++)
                error("distribution '" + doc_.distributions[i].name + "' declared twice", spans_.distributions[i]);
        seen.clear();
        for (size_t i = 0; i < doc_.machines.size(); ++i)
            if (seen[doc_.machines[i].name]++)
                error("machine '" + doc_.machines[i].name + "' declared twice", spans_.machines[i].name);
        seen.clear();
        for (size_t i = 0; i < doc_.queries.size(); ++i)
            if (seen[doc_.queries[i].name]++)
                error("query '" + doc_.queries[i].name + "' declared twice", spans_.queries[i]);
    }

    void machines() {
        for (size_t i = 0; i < doc_.machines.size(); ++i) {
            const auto& m = doc_.machines[i];
            const auto& ms = spans_.machines[i];
            for (const auto& d : validate_prtesm(m)) {
                SourceSpan at = ms.name;
                if (d.transition && *d.transition < ms.transitions.size()) at = ms.transitions[*d.transition];
                else if (d.state && *d.state < ms.states.size()) at = ms.states[*d.state];
                error("machine '" + m.name + "': " + d.message, at, d.severity);
            }
            for (size_t t = 0; t < m.transitions.size(); ++t)
                if (m.transitions[t].distribution && !doc_.find_distribution(*m.transitions[t].distribution))
                    error("unknown distribution '" + *m.transitions[t].distribution + "'",
                          ms.delays[t].value_or(ms.transitions[t]));
        }
    }

    bool network() {
        if (!doc_.network) return false;
        const auto& net = *doc_.network;
        size_t before = count_errors();
        std::set<std::string> tags;
        for (size_t i = 0; i < net.modules.size(); ++i) {
            const auto& m = net.modules[i];
            const auto& ms = spans_.modules[i];
            if (!tags.insert(tag_of(m)).second) error("module tag '" + m.tag + "' used twice", ms.tag);
            const Prtesm* machine = doc_.find_machine(m.machine);
            if (!machine) {
                error("unknown machine '" + m.machine + "'", ms.machine);
                continue;
            }
            if (m.actions.empty()) error("module '" + m.tag + "' selects no communication action", ms.tag);
            std::set<std::string> pins;
            for (size_t a = 0; a < m.actions.size(); ++a) {
                const auto& act = m.actions[a];
                if (!pins.insert(act.pin).second) error("action '" + act.pin + "' selected twice", ms.actions[a]);
                std::set<std::string> attached;
                bool triggers = false;
                for (const auto& t : machine->transitions)
                    if (t.trigger && t.trigger->pin == act.pin) {
                        triggers = true;
                        if (t.distribution) attached.insert(*t.distribution);
                    }
                if (!triggers) {
                    error("'" + act.pin + "' is not a trigger of machine '" + m.machine + "'", ms.actions[a]);
                    continue;
                }
                if (act.delay) {
                    if (!doc_.find_distribution(*act.delay))
                        error("unknown distribution '" + *act.delay + "'", ms.actions[a]);
                } else if (attached.size() != 1) {
                    error(attached.empty() ? "action '" + act.pin + "' has no delay distribution"
                                           : "action '" + act.pin + "' has conflicting delay distributions",
                          ms.actions[a]);
                }
            }
        }
        if (count_errors() != before) return false;
        try {
            network_ = build_network(doc_);
            return true;
        } catch (const std::exception& e) {
            error(e.what(), spans_.network);
            return false;
        }
    }

    void check_target(const Expr& e, SourceSpan at, const std::set<std::string>& vars) {
        for (const auto& v : e.variables())
            if (!vars.count(v)) error("unknown variable '" + v + "' in target", at);
    }

    void targets(bool network_ok) {
        std::set<std::string> vars;
        if (network_ok) {
            for (const auto& m : network_->modules) {
                vars.insert(m.location_var);
                vars.insert(m.clocks.begin(), m.clocks.end());
                vars.insert(m.flags.begin(), m.flags.end());
            }
            if (doc_.network->target) check_target(*doc_.network->target, *spans_.network_target, vars);
        }
        for (size_t i = 0; i < doc_.queries.size(); ++i) {
            const auto& q = doc_.queries[i];
            if (!doc_.network) {
                error("query '" + q.name + "' needs a network", spans_.queries[i]);
                continue;
            }
            if (!doc_.query_target(q)) {
                error("query '" + q.name + "' has no target and the network declares none", spans_.queries[i]);
                continue;
            }
            if (network_ok && q.target) check_target(*q.target, *spans_.query_targets[i], vars);
        }
    }

    void scenario() {
        if (!doc_.scenario) return;
        try {
            doc_.scenario->validate();
        } catch (const SimError& e) {
            error(std::string("scenario: ") + e.what(), spans_.scenario);
        }
    }

    size_t count_errors() const {
        return static_cast<size_t>(std::count_if(diags_.begin(), diags_.end(),
                                                 [](const Diagnostic& d) { return d.severity == Severity::Error; }));
    }

    const ModelDocument& doc_;
    const Spans& spans_;
    std::vector<Diagnostic>& diags_;
    std::optional<PtaNetwork> network_;
};

}  // namespace

ParseResult parse_model(std::string_view text) {
    ParseResult result;
    try {
        Lexer lexer(text, result.diagnostics);
        auto tokens = lexer.run();
        Parser parser(text, std::move(tokens), result.diagnostics);
        parser.run();
        bool has_error = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
        if (!has_error && !parser.syntax_errors) {
            Resolver(parser.doc, parser.spans, result.diagnostics).run();
            has_error = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                    [](const Diagnostic& d) { return d.severity == Severity::Error; });
        }
        if (!has_error) result.document = std::move(parser.doc);
    } catch (const std::exception& e) {
        result.document.reset();
        result.diagnostics.push_back({Severity::Error, std::string("internal error: ") + e.what(), {}});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string print_time(Tick t) { return std::to_string(t); }

std::string print_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string print_model(const ModelDocument& doc) {
    std::ostringstream out;
    out << "version " << doc.version << ";\n";
    for (const auto& d : doc.distributions) {
        out << "\ndistribution " << d.name << " {\n";
        for (const auto& p : d.cdf.points()) out << "  " << print_time(p.tick) << " : " << to_exact_string(p.cumulative) << ";\n";
        out << "}\n";
    }
    for (const auto& m : doc.machines) {
        out << "\nprtesm " << m.name << " {\n";
        if (!m.states.empty()) {
            out << "  states ";
            for (size_t i = 0; i < m.states.size(); ++i) out << (i ? ", " : "") << m.states[i];
            out << ";\n";
        }
        if (!m.clocks.empty()) {
            out << "  clocks ";
            for (size_t i = 0; i < m.clocks.size(); ++i) out << (i ? ", " : "") << m.clocks[i];
            out << ";\n";
        }
        for (const auto& t : m.transitions) {
            out << "  " << t.source << " -> " << t.target;
            if (t.trigger) {
                if (t.trigger->direction == Direction::ToBlock) out << " on " << t.trigger->pin << "/";
                else out << " on /" << t.trigger->pin;
            }
            if (t.guard) {
                const auto& g = *t.guard;
                out << " guard " << g.clock;
                if (g.lower && g.upper) out << " in [" << print_time(*g.lower) << ", " << print_time(*g.upper) << "]";
                else if (g.upper) out << " <= " << print_time(*g.upper);
                else out << " >= " << print_time(g.lower.value_or(0));
            }
            if (!t.resets.empty()) {
                out << " reset ";
                for (size_t i = 0; i < t.resets.size(); ++i) out << (i ? ", " : "") << t.resets[i];
            }
            if (t.distribution) out << " delay " << *t.distribution;
            out << ";\n";
        }
        out << "}\n";
    }
    if (doc.network) {
        const auto& n = *doc.network;
        out << "\nnetwork {\n";
        if (n.semantics) out << "  semantics " << (*n.semantics == TimingSemantics::Deadline ? "deadline" : "window") << ";\n";
        for (const auto& m : n.modules) {
            out << "  module " << m.tag << " : " << m.machine << " {\n";
            for (const auto& a : m.actions) {
                out << "    action " << a.pin;
                if (a.delay) out << " delay " << *a.delay;
                if (a.sync) out << " sync " << *a.sync;
                if (a.done) out << " done " << *a.done;
                out << ";\n";
            }
            out << "  }\n";
        }
        if (n.target) out << "  target " << n.target->to_string() << ";\n";
        out << "}\n";
    }
    for (const auto& q : doc.queries) {
        out << "\nquery " << q.name << " {\n  bound " << print_time(q.bound) << ";\n";
        out << "  mode " << (q.mode == QueryMode::Max ? "max" : q.mode == QueryMode::Min ? "min" : "both") << ";\n";
        if (q.target) out << "  target " << q.target->to_string() << ";\n";
        if (q.reference) out << "  reference " << to_exact_string(*q.reference) << ";\n";
        out << "}\n";
    }
    if (doc.scenario) {
        const ScenarioConfig defaults;
        const ScenarioConfig& sc = *doc.scenario;
        out << "\nscenario {\n";
        for (const auto& k : scenario_keys()) {
            if (k.flag) {
                if (sc.*(k.flag) != defaults.*(k.flag))
                    out << "  " << k.name << " = " << (sc.*(k.flag) ? "true" : "false") << ";\n";
            } else if (sc.*(k.number) != defaults.*(k.number)) {
                out << "  " << k.name << " = " << print_double(sc.*(k.number)) << ";\n";
            }
        }
        out << "}\n";
    }
    return out.str();
}

PtaNetwork build_network(const ModelDocument& doc) {
    if (!doc.network) throw ModelError("the model declares no network");
    std::vector<TransformResult> parts;
    for (const auto& m : doc.network->modules) {
        const Prtesm* machine = doc.find_machine(m.machine);
        if (!machine) throw ModelError("unknown machine '" + m.machine + "'");
        std::vector<CommBinding> bindings;
        for (const auto& a : m.actions) {
            std::string dist_name;
            if (a.delay) {
                dist_name = *a.delay;
            } else {
                for (const auto& t : machine->transitions)
                    if (t.trigger && t.trigger->pin == a.pin && t.distribution) dist_name = *t.distribution;
            }
            const NamedDistribution* dist = doc.find_distribution(dist_name);
            if (!dist) throw ModelError("no delay distribution for action '" + a.pin + "' of module '" + m.tag + "'");
            bindings.push_back({a.pin, dist->cdf, a.sync.value_or(sanitize_identifier(a.pin)), a.done.value_or("")});
        }
        parts.push_back(prtesm_to_pta(*machine, bindings, TransformOptions{m.tag, "i"}));
    }
    return assemble_network(std::move(parts));
}

}  // namespace prtspace
