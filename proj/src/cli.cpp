#include "prtspace/cli.hpp"

#include "prtspace/checker.hpp"
#include "prtspace/spatial.hpp"
#include "prtspace/textio.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#ifndef PRTSPACE_VERSION
#define PRTSPACE_VERSION "0.0.0"
#endif

namespace prtspace::cli {

using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    std::ostream& out;
    std::ostream& err;
    json manifest;
    int digits = 0;  // 0: exact

    std::string read_input(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw UsageError("cannot read '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string data = buf.str();
        manifest["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(data)}, {"bytes", data.size()}});
        return data;
    }

    void write_output(const std::string& path, const std::string& data) {
        std::ofstream f(path, std::ios::binary);
        if (!f || !(f << data)) throw UsageError("cannot write '" + path + "'");
        manifest["outputs"].push_back({{"path", path}, {"sha256", sha256_hex(data)}});
    }

    std::string prob(const Probability& p) const { return digits > 0 ? to_decimal_string(p, digits) : to_exact_string(p); }
    std::string real(double v) const {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.*g", digits > 0 ? digits : 17, v);
        return buf;
    }
};

ModelDocument load_model(Context& ctx, const std::string& path) {
    std::string text = ctx.read_input(path);
    ParseResult r = parse_model(text);
    for (const auto& d : r.diagnostics) ctx.err << d.format(path) << "\n";
    if (!r.document) throw Failure("'" + path + "' has errors");
    return std::move(*r.document);
}

Tick parse_seconds(const std::string& text) {
    std::string t = text;
    if (!t.empty() && !std::isalpha(static_cast<unsigned char>(t.back()))) t += "s";
    try {
        return parse_time_literal(t);
    } catch (const NumberFormatError& e) {
        throw UsageError(std::string("bad time '") + text + "': " + e.what());
    }
}

std::string seconds_text(Tick t) { return to_exact_string(Probability(t, 10000)); }

DigitalMdp build_mdp(const ModelDocument& doc, std::optional<TimingSemantics> forced) {
    PtaNetwork net = build_network(doc);
    ComposeOptions opts;
    opts.semantics = forced ? *forced : doc.network->semantics.value_or(TimingSemantics::Deadline);
    return compose(net, opts);
}

std::optional<TimingSemantics> semantics_flag(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "deadline") return TimingSemantics::Deadline;
    if (s == "window") return TimingSemantics::Window;
    throw UsageError("--semantics must be 'deadline' or 'window'");
}

// ---------------------------------------------------------------------------

int cmd_validate(Context& ctx, const std::string& path) {
    ModelDocument doc = load_model(ctx, path);
    ctx.manifest["results"] = {{"distributions", doc.distributions.size()},
                               {"machines", doc.machines.size()},
                               {"modules", doc.network ? doc.network->modules.size() : 0},
                               {"queries", doc.queries.size()}};
    ctx.out << path << ": ok (" << doc.distributions.size() << " distributions, " << doc.machines.size()
            << " machines, " << (doc.network ? doc.network->modules.size() : 0) << " modules, " << doc.queries.size()
            << " queries)\n";
    return kExitOk;
}

struct CheckArgs {
    std::string model, query, target, bound, mode, semantics, arithmetic = "exact";
};

int cmd_check(Context& ctx, const CheckArgs& a) {
    ModelDocument doc = load_model(ctx, a.model);
    if (!doc.network) throw Failure("the model declares no network");
    QueryDecl q;
    if (!a.query.empty()) {
        const QueryDecl* found = doc.find_query(a.query);
        if (!found) throw Failure("unknown query '" + a.query + "'");
        q = *found;
    } else {
        q.name = "adhoc";
        if (a.bound.empty()) throw UsageError("give --query NAME or --bound SECONDS");
        q.mode = QueryMode::Both;
    }
    if (!a.bound.empty()) q.bound = parse_seconds(a.bound);
    if (!a.target.empty()) {
        try {
            q.target = parse_expr(a.target);
        } catch (const ExprError& e) {
            throw Failure(std::string("--target: ") + e.what());
        }
    }
    if (!a.mode.empty()) {
        if (a.mode == "max") q.mode = QueryMode::Max;
        else if (a.mode == "min") q.mode = QueryMode::Min;
        else if (a.mode == "both") q.mode = QueryMode::Both;
        else throw UsageError("--mode must be max, min or both");
    }
    auto target = doc.query_target(q);
    if (!target) throw Failure("no target: give --target or declare one in the network");

    CheckOptions opts;
    opts.horizon_cap = default_horizon_cap();
    if (a.arithmetic == "double") opts.arithmetic = Arithmetic::Double;
    else if (a.arithmetic != "exact") throw UsageError("--arithmetic must be exact or double");
    if (q.bound > opts.horizon_cap)
        throw Failure("bound " + std::to_string(q.bound) + " ticks exceeds the horizon cap of " +
                      std::to_string(opts.horizon_cap) + " (PRTSPACE_HORIZON_CAP)");

    DigitalMdp mdp = build_mdp(doc, semantics_flag(a.semantics));
    ctx.out << "query: " << q.name << "\n";
    ctx.out << "target: " << target->to_string() << "\n";
    ctx.out << "bound: " << q.bound << " ticks (" << seconds_text(q.bound) << " s)\n";
    ctx.out << "mdp: " << mdp.state_count() << " states, " << mdp.transition_count() << " transitions\n";

    json results{{"query", q.name}, {"target", target->to_string()}, {"bound_ticks", q.bound},
                 {"mdp_states", mdp.state_count()}};
    std::vector<std::pair<std::string, OptMode>> modes;
    if (q.mode != QueryMode::Min) modes.push_back({"max", OptMode::Max});
    if (q.mode != QueryMode::Max) modes.push_back({"min", OptMode::Min});
    std::optional<Probability> first;
    for (const auto& [name, mode] : modes) {
        ReachabilityResult r = check_bounded_reachability(mdp, {*target, q.bound, mode}, opts);
        ctx.out << name << ": " << ctx.prob(r.probability) << "\n";
        ctx.out << name << " iterations: " << r.iterations << ", explored: " << r.states_explored << "\n";
        results[name] = {{"probability", to_exact_string(r.probability)},
                         {"decimal", to_decimal_string(r.probability, 17)},
                         {"iterations", r.iterations},
                         {"states_explored", r.states_explored}};
        if (!first) first = r.probability;
    }
    if (q.reference && first) {
        Probability diff = *first - *q.reference;
        Probability mag = abs(diff);
        bool match = mag <= Probability(mpz_class(1), mpz_class("10000000000"));
        ctx.out << "reference: " << to_exact_string(*q.reference) << "\n";
        ctx.out << "difference: " << to_decimal_string(diff, 17) << (match ? " (matches within 1e-10)" : " (does not match)")
                << "\n";
        results["reference"] = {{"value", to_exact_string(*q.reference)},
                                {"difference", to_decimal_string(diff, 17)},
                                {"matches_1e-10", match}};
    }
    ctx.manifest["results"] = results;
    return kExitOk;
}

struct DensityArgs {
    std::string model, target, bin = "0.02", upto = "0.5", mode = "max", semantics;
};

int cmd_density(Context& ctx, const DensityArgs& a) {
    Tick bin = parse_seconds(a.bin), upto = parse_seconds(a.upto);
    if (bin <= 0) throw UsageError("--bin must be positive");
    if (upto <= 0) throw UsageError("--upto must be positive");
    ModelDocument doc = load_model(ctx, a.model);
    if (!doc.network) throw Failure("the model declares no network");
    std::optional<Expr> target = doc.network->target;
    if (!a.target.empty()) {
        try {
            target = parse_expr(a.target);
        } catch (const ExprError& e) {
            throw Failure(std::string("--target: ") + e.what());
        }
    }
    if (!target) throw Failure("no target: give --target or declare one in the network");
    OptMode mode = a.mode == "min" ? OptMode::Min : OptMode::Max;
    if (a.mode != "min" && a.mode != "max") throw UsageError("--mode must be max or min");

    std::vector<Tick> grid;
    for (Tick t = bin; t < upto; t += bin) grid.push_back(t);
    grid.push_back(upto);
    CheckOptions opts;
    opts.horizon_cap = default_horizon_cap();
    if (upto > opts.horizon_cap) throw Failure("--upto exceeds the horizon cap (PRTSPACE_HORIZON_CAP)");
    DigitalMdp mdp = build_mdp(doc, semantics_flag(a.semantics));
    DensityResult d = density_sweep(mdp, *target, grid, mode, opts);
    ctx.out << "T_s,cumulative,density\n";
    Probability sum = 0;
    for (const auto& p : d.points) {
        ctx.out << seconds_text(p.bound) << "," << ctx.prob(p.cumulative) << "," << ctx.prob(p.density) << "\n";
        sum += p.density;
    }
    ctx.manifest["results"] = {{"rows", d.points.size()},
                               {"final_cumulative", to_exact_string(d.points.back().cumulative)},
                               {"density_sum", to_exact_string(sum)}};
    return kExitOk;
}

struct SimulateArgs {
    std::string model, delay, sweep, trace;
    bool no_human = false;
    int jobs = 1;
};

std::vector<double> parse_delays(const std::string& list) {
    std::vector<double> delays;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0' || !std::isfinite(v) || v < 0)
            throw UsageError("invalid delay '" + item + "' in --sweep");
        delays.push_back(v);
    }
    if (delays.empty()) throw UsageError("--sweep needs at least one delay");
    if (!std::is_sorted(delays.begin(), delays.end())) throw UsageError("--sweep delays must be ascending");
    return delays;
}

std::string trace_path(const std::string& base, double delay, bool many) {
    if (!many) return base;
    char tag[32];
    std::snprintf(tag, sizeof tag, "_%.3f", delay);
    auto dot = base.rfind('.');
    auto slash = base.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return base + tag;
    return base.substr(0, dot) + tag + base.substr(dot);
}

int cmd_simulate(Context& ctx, const SimulateArgs& a) {
    ScenarioConfig config;
    if (!a.model.empty()) {
        ModelDocument doc = load_model(ctx, a.model);
        if (doc.scenario) config = *doc.scenario;
    }
    if (a.no_human) config.human_enabled = false;
    std::vector<double> delays;
    if (!a.sweep.empty()) {
        if (!a.delay.empty()) throw UsageError("give either --delay or --sweep");
        delays = parse_delays(a.sweep);
    } else if (!a.delay.empty()) {
        delays = parse_delays(a.delay);
        if (delays.size() != 1) throw UsageError("--delay takes one value");
    } else {
        delays = {config.reaction_delay};
    }
    if (a.jobs < 1) throw UsageError("--jobs must be at least 1");
    try {
        config.validate();
    } catch (const SimError& e) {
        throw Failure(std::string("scenario: ") + e.what());
    }

    std::vector<SimResult> results(delays.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < delays.size();) {
            ScenarioConfig c = config;
            c.reaction_delay = delays[i];
            results[i] = run_scenario(c);
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < std::min<int>(a.jobs, static_cast<int>(delays.size())); ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    ctx.out << "delay_s,collided,impact_time_s,impact_speed_mps,reached_end,final_speed_mps,end_time_s\n";
    json reports = json::array();
    for (size_t i = 0; i < delays.size(); ++i) {
        const auto& r = results[i].report;
        ctx.out << ctx.real(r.reaction_delay) << "," << (r.collided ? "true" : "false") << ","
                << (r.collided ? ctx.real(r.impact_time) : "") << ","
                << (r.collided ? ctx.real(r.robot_speed_at_impact) : "") << "," << (r.reached_end ? "true" : "false")
                << "," << (r.reached_end ? ctx.real(r.final_speed) : "") << "," << ctx.real(r.end_time) << "\n";
        reports.push_back({{"delay_s", r.reaction_delay},
                           {"collided", r.collided},
                           {"impact_time_s", r.impact_time},
                           {"impact_speed_mps", r.robot_speed_at_impact},
                           {"reached_end", r.reached_end},
                           {"final_speed_mps", r.final_speed}});
        if (!a.trace.empty()) {
            std::ostringstream csv;
            write_trace_csv(csv, results[i].trace);
            ctx.write_output(trace_path(a.trace, delays[i], delays.size() > 1), csv.str());
        }
    }
    ctx.manifest["results"] = {{"reports", reports}};
    return kExitOk;
}

std::vector<TraceRecord> load_trace(Context& ctx, const std::string& path) {
    std::istringstream in(ctx.read_input(path));
    try {
        return read_trace_csv(in);
    } catch (const TraceFormatError& e) {
        throw Failure(path + ":" + std::to_string(e.row()) + ": " + e.what());
    }
}

struct SpatialArgs {
    std::string trace, bespaced;
    double threshold = 0.0, robot_prob = 1.0, human_prob = 1.0;
};

int cmd_spatial(Context& ctx, const SpatialArgs& a) {
    auto trace = load_trace(ctx, a.trace);
    if (!(a.threshold >= 0 && a.threshold <= 1)) throw UsageError("--threshold must lie in [0,1]");
    SpatioTemporalSpec robot, human;
    std::vector<CollisionEvent> events;
    try {
        robot = trace_to_spec(trace, Entity::Robot, a.robot_prob);
        human = trace_to_spec(trace, Entity::Human, a.human_prob);
        events = check_collision(robot, human);
    } catch (const SpatialError& e) {
        throw Failure(e.what());
    }
    auto kept = threshold_filter(events, a.threshold);
    ctx.out << "time_s,overlap_xmin,overlap_xmax,overlap_ymin,overlap_ymax,joint_probability\n";
    for (const auto& e : kept)
        ctx.out << ctx.real(e.time()) << "," << ctx.real(e.overlap.xmin) << "," << ctx.real(e.overlap.xmax) << ","
                << ctx.real(e.overlap.ymin) << "," << ctx.real(e.overlap.ymax) << "," << ctx.real(e.joint_probability)
                << "\n";
    if (!a.bespaced.empty()) {
        ctx.write_output(a.bespaced + "-robot.bsd", export_bespaced(robot));
        ctx.write_output(a.bespaced + "-human.bsd", export_bespaced(human));
    }
    json results{{"events", events.size()}, {"kept", kept.size()}, {"threshold", a.threshold}};
    if (!kept.empty()) results["first_event_time_s"] = kept.front().time();
    ctx.manifest["results"] = results;
    return kExitOk;
}

int cmd_export_prism(Context& ctx, const std::string& model, const std::string& out_path) {
    ModelDocument doc = load_model(ctx, model);
    std::string text;
    try {
        text = export_prism(build_network(doc));
    } catch (const ModelError& e) {
        throw Failure(e.what());
    }
    if (out_path.empty() || out_path == "-") ctx.out << text;
    else ctx.write_output(out_path, text);
    ctx.manifest["results"] = {{"bytes", text.size()}, {"sha256", sha256_hex(text)}};
    return kExitOk;
}

int cmd_export_bespaced(Context& ctx, const std::string& trace_file, const std::string& entity,
                        const std::string& out_path, double probability) {
    auto trace = load_trace(ctx, trace_file);
    Entity e;
    if (entity == "robot") e = Entity::Robot;
    else if (entity == "human") e = Entity::Human;
    else throw UsageError("--entity must be robot or human");
    std::string text;
    try {
        text = export_bespaced(trace_to_spec(trace, e, probability));
    } catch (const SpatialError& ex) {
        throw Failure(ex.what());
    }
    if (out_path.empty() || out_path == "-") ctx.out << text;
    else ctx.write_output(out_path, text);
    ctx.manifest["results"] = {{"bytes", text.size()}};
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Probabilistic real-time and spatial analysis of reactive building blocks", "prtspace"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PRTSPACE_VERSION);
    std::string manifest_path = "prtspace-manifest.json";
    int digits = 0;
    app.add_option("--manifest", manifest_path, "Where to write the run manifest ('-' to skip)");
    app.add_option("--digits", digits, "Significant digits for printed numbers (default: exact)")
        ->check(CLI::Range(1, 200));

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "Parse and resolve a model file");
    validate->add_option("model", validate_file, "Model file (.prt)")->required();

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Bounded reachability P=?[F<=T target]");
    check->add_option("model", ca.model, "Model file (.prt)")->required();
    check->add_option("--query", ca.query, "Query declared in the model");
    check->add_option("--target", ca.target, "Target expression (overrides the query's)");
    check->add_option("--bound", ca.bound, "Time bound in seconds, or with a unit suffix (ms, us)");
    check->add_option("--mode", ca.mode, "max, min or both");
    check->add_option("--semantics", ca.semantics, "deadline or window (overrides the model)");
    check->add_option("--arithmetic", ca.arithmetic, "exact or double");

    DensityArgs da;
    auto* density = app.add_subcommand("density", "Cumulative reachability and per-bin density on a time grid");
    density->add_option("model", da.model, "Model file (.prt)")->required();
    density->add_option("--bin", da.bin, "Bin width in seconds");
    density->add_option("--upto", da.upto, "Last grid point in seconds");
    density->add_option("--target", da.target, "Target expression");
    density->add_option("--mode", da.mode, "max or min");
    density->add_option("--semantics", da.semantics, "deadline or window");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run the robot/human scenario");
    simulate->add_option("model", sa.model, "Model file whose scenario block configures the run");
    simulate->add_option("--delay", sa.delay, "Reaction delay in seconds");
    simulate->add_option("--sweep", sa.sweep, "Comma-separated ascending reaction delays");
    simulate->add_option("--trace", sa.trace, "Trace CSV output (suffixed per delay in a sweep)");
    simulate->add_flag("--no-human", sa.no_human, "Run without the human");
    simulate->add_option("--jobs", sa.jobs, "Parallel runs for a sweep");

    SpatialArgs pa;
    auto* spatial = app.add_subcommand("spatial", "Collision check over a trace");
    spatial->add_option("trace", pa.trace, "Trace CSV")->required();
    spatial->add_option("--threshold", pa.threshold, "Drop events below this joint probability");
    spatial->add_option("--bespaced", pa.bespaced, "Write <stem>-robot.bsd and <stem>-human.bsd");
    spatial->add_option("--robot-probability", pa.robot_prob, "Occupancy probability of robot boxes");
    spatial->add_option("--human-probability", pa.human_prob, "Occupancy probability of human boxes");

    std::string prism_model, prism_out;
    auto* prism = app.add_subcommand("export-prism", "Write the PTA network as PRISM text");
    prism->add_option("model", prism_model, "Model file (.prt)")->required();
    prism->add_option("out", prism_out, "Output .pta file (default: standard output)");

    std::string bsd_trace, bsd_entity = "robot", bsd_out;
    double bsd_prob = 1.0;
    auto* bsd = app.add_subcommand("export-bespaced", "Write one entity of a trace in BeSpaceD form");
    bsd->add_option("trace", bsd_trace, "Trace CSV")->required();
    bsd->add_option("out", bsd_out, "Output .bsd file (default: standard output)");
    bsd->add_option("--entity", bsd_entity, "robot or human");
    bsd->add_option("--probability", bsd_prob, "Occupancy probability");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Context ctx{out, err, json::object(), digits};
    CLI::App* sub = app.get_subcommands().front();
    ctx.manifest["tool"] = "prtspace";
    ctx.manifest["version"] = PRTSPACE_VERSION;
    ctx.manifest["command"] = sub->get_name();
    ctx.manifest["args"] = args;
    ctx.manifest["inputs"] = json::array();
    ctx.manifest["outputs"] = json::array();
    if (const char* cap = std::getenv("PRTSPACE_HORIZON_CAP")) ctx.manifest["env"]["PRTSPACE_HORIZON_CAP"] = cap;

    auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
        if (sub == validate) code = cmd_validate(ctx, validate_file);
        else if (sub == check) code = cmd_check(ctx, ca);
        else if (sub == density) code = cmd_density(ctx, da);
        else if (sub == simulate) code = cmd_simulate(ctx, sa);
        else if (sub == spatial) code = cmd_spatial(ctx, pa);
        else if (sub == prism) code = cmd_export_prism(ctx, prism_model, prism_out);
        else code = cmd_export_bespaced(ctx, bsd_trace, bsd_entity, bsd_out, bsd_prob);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        code = kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = kExitFailure;
    }
    ctx.manifest["exit_code"] = code;
    ctx.manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (manifest_path != "-") {
        std::ofstream f(manifest_path);
        if (!f || !(f << ctx.manifest.dump(2) << "\n")) {
            err << "error: cannot write manifest '" << manifest_path << "'\n";
            return kExitUsage;
        }
    }
    return code;
}

}  // namespace prtspace::cli
