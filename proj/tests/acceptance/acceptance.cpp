// Acceptance run: one PASS/FAIL line per criterion, with its runtime.
// Tolerances and time limits are pinned below. Exit status is 1 if any
// criterion fails.

#include "oracles.hpp"

#include "prtspace/cli.hpp"
#include "prtspace/textio.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace prtspace;

namespace {

constexpr double kMassTol = 1e-15;          // criterion 1, binary floating point
constexpr double kEnumTol = 1e-10;          // criterion 3
constexpr double kDensityTol = 1e-9;        // criterion 6
constexpr double kPublishedBinTol = 1e-3;       // criterion 6, published coordinates
constexpr double kImpactLimit050 = 0.7;     // criterion 7
constexpr double kImpactLimit047 = 0.2;     // criterion 7
constexpr double kPublishedImpactTol = 0.1;     // criterion 7, reported only
constexpr double kPublishedImpact050 = 0.625;
constexpr double kPublishedImpact047 = 0.125;
constexpr double kTailThreshold = 1e-10;    // criterion 8
constexpr double kTailBound = 5e-14;
constexpr const char* kPublishedHeadline = "0.9999874114988752";
constexpr double kHeadlineReproTol = 1e-10;

// Published density histogram: (bin start s, probability).
const std::vector<std::pair<double, double>> kPublishedDensity = {
    {0.00, 4.0000000000000013E-4}, {0.02, 0.0036999999997500014}, {0.04, 8.999999977499992E-4},
    {0.06, 0.0},                   {0.08, 0.0},                   {0.10, 0.0},
    {0.12, 0.0},                   {0.14, 0.0},                   {0.16, 0.007599960000250001},
    {0.18, 0.07488979000200004},   {0.20, 0.01251016349812517},   {0.22, 0.0},
    {0.24, 0.0},                   {0.26, 0.020000000009000263},  {0.28, 0.02060000672468698},
    {0.30, 0.0043899797636878235}, {0.32, 1.0020261812682119E-5}, {0.34, 0.0},
    {0.36, 0.0},                   {0.38, 0.0},                   {0.40, 0.1359999975002503},
    {0.42, 0.48199882466624966},   {0.44, 0.21120057744143772},   {0.46, 0.02578809163387452},
    {0.48, 0.0},                   {0.50, 0.0},
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ModelDocument load(const char* name) {
    auto r = parse_model(oracle::read_file(oracle::source_path(std::string("models/") + name)));
    if (!r.ok()) throw std::runtime_error(std::string("cannot load ") + name);
    return *r.document;
}

Outcome c1_convolution() {
    std::vector<DelayPmf> pmfs;
    std::vector<std::map<Tick, Probability>> parts;
    for (const auto& c : oracle::table1_all()) {
        pmfs.push_back(cdf_to_pmf(c));
        parts.push_back(oracle::table_masses(c));
    }
    size_t tuples = 0;
    auto expected = oracle::enumerate_sum(parts, &tuples);
    auto got = convolve_all(pmfs);
    bool exact = got.masses().size() == expected.size();
    double worst = 0;
    for (const auto& m : got.masses()) {
        auto it = expected.find(m.tick);
        if (it == expected.end() || it->second != m.prob) exact = false;
        if (it != expected.end()) worst = std::max(worst, std::abs(to_double(m.prob) - to_double(it->second)));
    }
    bool support = got.min_tick() == 4300 && got.max_tick() == 5000;
    return {tuples == 750 && exact && worst <= kMassTol && support,
            std::to_string(tuples) + " tuples, " + std::to_string(got.masses().size()) +
                " masses, exact match, support [" + fmt("%.3f", ticks_to_seconds(got.min_tick())) + " s, " +
                fmt("%.3f", ticks_to_seconds(got.max_tick())) + " s]"};
}

Outcome c2_single_module() {
    int knots = 0, bad = 0;
    for (const auto& cdf : oracle::table1_all()) {
        auto mdp = compose(oracle::series_chain({cdf}));
        auto target = parse_expr("flag_m0");
        for (const auto& k : cdf.points()) {
            ++knots;
            if (check_bounded_reachability(mdp, {target, k.tick, OptMode::Max}).probability != k.cumulative) ++bad;
        }
    }
    auto mdp = compose(oracle::series_chain({table1::communication()}));
    auto target = parse_expr("flag_m0");
    auto p16 = check_bounded_reachability(mdp, {target, 160}).probability;
    auto p169 = check_bounded_reachability(mdp, {target, 169}).probability;
    bool examples = p16 == parse_probability("0.98") && p169 == parse_probability("0.9999999995");
    return {bad == 0 && examples, std::to_string(knots - bad) + "/" + std::to_string(knots) +
                                      " knots exact; P(16 ms) = " + to_exact_string(p16) +
                                      ", P(16.9 ms) = " + to_exact_string(p169)};
}

Outcome c3_enumeration() {
    std::mt19937_64 rng(20240601);
    int accepted = 0, attempts = 0, bad = 0;
    double worst = 0;
    size_t largest = 0;
    while (accepted < 200 && attempts < 5000) {
        ++attempts;
        auto net = oracle::random_network(rng);
        ComposeOptions opts;
        if (attempts % 2) opts.semantics = TimingSemantics::Window;
        DigitalMdp mdp;
        try {
            mdp = compose(net, opts);
        } catch (const ModelError&) {
            continue;
        }
        Expr target = Expr::constant(false);
        for (const auto& m : net.modules) target = Expr::disj(target, Expr::variable(m.flags[0]));
        BoundExpr bound_target(target, mdp.variables);
        std::vector<char> mask(mdp.state_count());
        for (StateId s = 0; s < mdp.state_count(); ++s) mask[s] = bound_target.evaluate(mdp.valuation(s));
        Tick bound = static_cast<Tick>(rng() % 12);
        for (OptMode mode : {OptMode::Max, OptMode::Min}) {
            auto r = check_bounded_reachability(mdp, {target, bound, mode});
            largest = std::max(largest, r.states_explored);
            oracle::PathEnumerator paths(mdp, mask, mode == OptMode::Max);
            double diff = std::abs(to_double(r.probability) - paths.value(mdp.initial, bound));
            worst = std::max(worst, diff);
            if (!(diff <= kEnumTol)) ++bad;
        }
        ++accepted;
    }
    return {accepted >= 20 && bad == 0 && largest <= 100000,
            std::to_string(accepted) + " networks (max and min), worst difference " + fmt("%.3g", worst) +
                ", largest unfolding " + std::to_string(largest) + " states"};
}

Outcome c4_series() {
    const std::vector<DelayCdf> pool{table1::sensor_fetch(), table1::communication(), table1::communication(),
                                     table1::sensor_fetch()};
    bool ok = true;
    std::string detail;
    for (size_t k = 2; k <= 4; ++k) {
        std::vector<DelayCdf> chain(pool.begin(), pool.begin() + static_cast<long>(k));
        std::vector<DelayPmf> pmfs;
        for (const auto& c : chain) pmfs.push_back(cdf_to_pmf(c));
        auto conv = convolve_all(pmfs);
        auto mdp = compose(oracle::series_chain(chain));
        auto profile = reachability_profile(mdp, parse_expr("flag_m" + std::to_string(k - 1)), conv.max_tick() + 2);
        size_t mismatches = 0;
        for (Tick t = 0; t < static_cast<Tick>(profile.size()); ++t)
            if (profile[static_cast<size_t>(t)] != prob_at_most(conv, t)) ++mismatches;
        // the layered checker agrees with the profile at the support ends
        for (Tick t : {conv.min_tick() - 1, conv.min_tick(), conv.max_tick()})
            if (check_bounded_reachability(mdp, {parse_expr("flag_m" + std::to_string(k - 1)), t}).probability !=
                prob_at_most(conv, t))
                ++mismatches;
        ok = ok && mismatches == 0;
        detail += (detail.empty() ? "" : "; ") + std::string("k=") + std::to_string(k) + ": T in [0," +
                  std::to_string(profile.size() - 1) + "] exact, " + std::to_string(mismatches) + " mismatches";
    }
    return {ok, detail};
}

Outcome c5_headline(bool validated) {
    std::ostringstream out, err;
    int code = cli::run({"--manifest", "-", "check", oracle::source_path("models/moving_robot.prt"), "--query", "headline"},
                        out, err);
    auto doc = load("moving_robot.prt");
    auto mdp = compose(build_network(doc), ComposeOptions{});
    auto [lo, hi] = min_max_gap(mdp, parse_expr("flag_r1"), 4600);
    Probability published = parse_probability(kPublishedHeadline);
    Probability diff = hi - published;
    if (diff < 0) diff = -diff;
    bool reproduced = to_double(diff) <= kHeadlineReproTol;
    bool emitted = code == 0 && out.str().find(kPublishedHeadline) != std::string::npos &&
                   out.str().find("max: ") != std::string::npos &&
                   out.str().find("difference: ") != std::string::npos;
    std::string detail = "max " + to_decimal_string(hi, 17) + ", min " + to_decimal_string(lo, 17) + " vs published " +
                         kPublishedHeadline + "; " +
                         (reproduced ? "reproduced within 1e-10" : "not reproduced (difference " +
                                                                        to_decimal_string(diff, 6) +
                                                                        "); comparison emitted by check");
    return {emitted && validated, detail};
}

Outcome c6_density() {
    auto doc = load("moving_robot.prt");
    auto mdp = compose(build_network(doc));
    std::vector<Tick> grid;
    for (Tick t = 200; t <= 5000; t += 200) grid.push_back(t);
    auto d = density_sweep(mdp, parse_expr("flag_r1"), grid);
    bool nonneg = true;
    Probability sum = 0;
    for (const auto& p : d.points) {
        nonneg = nonneg && p.density >= 0;
        sum += p.density;
    }
    Probability gap = sum - d.points.back().cumulative;
    double gap_d = std::abs(to_double(gap));
    double published_sum = 0;
    for (const auto& [t, p] : kPublishedDensity) published_sum += p;
    bool published_ok = std::abs(published_sum - 1.0) <= kPublishedBinTol;
    return {nonneg && gap_d <= kDensityTol && published_ok,
            std::to_string(d.points.size()) + " bins non-negative, sum " + to_decimal_string(sum, 17) +
                " = cumulative(0.5 s) " + to_decimal_string(d.points.back().cumulative, 17) +
                "; published bins sum to " + fmt("%.16g", published_sum)};
}

Outcome c7_impact() {
    ScenarioConfig c;
    const std::vector<double> delays{0.40, 0.43, 0.46, 0.47, 0.50};
    auto reports = worst_case_sweep(c, delays);
    bool monotone = true;
    for (size_t i = 1; i < reports.size(); ++i)
        monotone = monotone && reports[i].robot_speed_at_impact >= reports[i - 1].robot_speed_at_impact;
    double v047 = reports[3].robot_speed_at_impact, v050 = reports[4].robot_speed_at_impact;
    bool limits = v050 <= kImpactLimit050 && v047 <= kImpactLimit047;
    std::string speeds;
    for (size_t i = 0; i < delays.size(); ++i)
        speeds += (i ? ", " : "") + fmt("%.2f", delays[i]) + " s: " + fmt("%.4g", reports[i].robot_speed_at_impact);
    auto band = [](double ours, double published) {
        return std::abs(ours - published) <= kPublishedImpactTol ? "within 0.1" : "outside 0.1";
    };
    return {monotone && limits,
            "impact m/s {" + speeds + "}; vs published 0.5 s: " + fmt("%.4g", v050) + " vs 0.625 (" +
                band(v050, kPublishedImpact050) + "), 0.47 s: " + fmt("%.4g", v047) + " vs 0.125 (" +
                band(v047, kPublishedImpact047) + ")"};
}

Outcome c8_spatial() {
    std::mt19937_64 rng(99);
    int bad = 0;
    size_t events = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto a = oracle::random_spec(rng, "a"), b = oracle::random_spec(rng, "b");
        auto got = check_collision(a, b);
        auto want = oracle::brute_collisions(a, b);
        if (got.size() != want.size()) {
            ++bad;
            continue;
        }
        for (size_t i = 0; i < got.size(); ++i)
            if (!oracle::same_event(got[i], want[i])) ++bad;
        events += got.size();
    }
    std::vector<DelayPmf> pmfs;
    for (const auto& c : oracle::table1_all()) pmfs.push_back(cdf_to_pmf(c));
    double tail = to_double(prob_at_least(convolve_all(pmfs), 4965));
    SpatioTemporalSpec robot{"robot", {{0, {10, 12, 14, 16}, tail}, {5000, {10, 12, 14, 16}, 1.0}}};
    SpatioTemporalSpec human{"human", {{0, {11.5, 12, 14.5, 15}, 1.0}, {5000, {11.5, 12, 14.5, 15}, 1.0}}};
    auto ev = check_collision(robot, human);
    auto kept = threshold_filter(ev, kTailThreshold);
    bool tail_ok = tail <= kTailBound && ev.size() == 2 && kept.size() == 1 && kept[0].joint_probability == 1.0;
    return {bad == 0 && tail_ok, "100 random spec pairs, " + std::to_string(events) +
                                     " events equal to brute force with product probabilities; tail event " +
                                     fmt("%.9g", tail) + " removed at 1e-10, unit event kept"};
}

Outcome c9_roundtrips() {
    auto text = oracle::read_file(oracle::source_path("models/moving_robot.prt"));
    auto doc = *parse_model(text).document;
    auto again = parse_model(print_model(doc));
    bool parse_print = again.ok() && *again.document == doc;

    auto cu = load("control_unit.prt");
    auto net = build_network(cu);
    auto pta = export_prism(net);
    bool golden = pta == oracle::read_file(oracle::source_path("tests/golden/control_unit.pta")) &&
                  pta.rfind("pta\n", 0) == 0 && pta.find("[i] s_c2=0 -> (s_c2'=1);") != std::string::npos &&
                  pta.find("s_c2=4 -> 0.8 : (s_c2'=5) + 0.18 : (s_c2'=6)") != std::string::npos &&
                  read_prism(pta) == net;

    ScenarioConfig c;
    auto trace = run_scenario(c).trace;
    bool bsd = true;
    for (auto e : {Entity::Robot, Entity::Human}) {
        auto spec = trace_to_spec(trace, e, 0.9);
        auto back = read_bespaced(export_bespaced(spec));
        back.entity = spec.entity;
        bsd = bsd && back == spec;
    }
    return {parse_print && golden && bsd, std::string("parse(print) ") + (parse_print ? "identical" : "differs") +
                                              ", PRISM golden " + (golden ? "matches" : "differs") +
                                              ", BeSpaceD round trip " + (bsd ? "identical" : "differs")};
}

Outcome c10_fuzz() {
    const std::string seed = oracle::read_file(oracle::source_path("models/moving_robot.prt"));
    std::mt19937_64 rng(7);
    int docs = 0, rejected = 0, crashes = 0, bad_spans = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string text = oracle::fuzz_input(rng, i, seed);
        try {
            auto r = parse_model(text);
            if (r.ok()) ++docs;
            else if (!r.diagnostics.empty()) ++rejected;
            else ++crashes;
            for (const auto& d : r.diagnostics)
                if (!oracle::span_consistent(text, d.span.offset, d.span.length, d.span.line, d.span.column)) ++bad_spans;
        } catch (...) {
            ++crashes;
        }
    }
    return {crashes == 0 && bad_spans == 0 && docs + rejected == 10000,
            std::to_string(docs) + " documents, " + std::to_string(rejected) + " with diagnostics, " +
                std::to_string(crashes) + " crashes, " + std::to_string(bad_spans) + " bad spans"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    bool validated = true;
    std::vector<Criterion> criteria{
        {1, "distribution oracle", 1, c1_convolution},
        {2, "single-module checker soundness", 1, c2_single_module},
        {3, "checker vs path enumeration", 120, c3_enumeration},
        {4, "series-composition cross-check", 10, c4_series},
        {5, "headline number", 600, [&] { return c5_headline(validated); }},
        {6, "density consistency", 600, c6_density},
        {7, "simulator impact speeds", 5, c7_impact},
        {8, "spatial oracle", 30, c8_spatial},
        {9, "text round trips", 1, c9_roundtrips},
        {10, "parser totality", 60, c10_fuzz},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = secs <= c.limit_s;
        bool pass = o.pass && in_time;
        if (c.id >= 2 && c.id <= 4) validated = validated && pass;
        if (!pass) ++failed;
        std::printf("%s %2d %s (%.3f s%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    in_time ? "" : ", over time limit", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
