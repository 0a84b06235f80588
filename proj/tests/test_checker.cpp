#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>

using namespace prtspace;

namespace {

std::vector<char> mask_of(const DigitalMdp& mdp, const Expr& e) {
    BoundExpr b(e, mdp.variables);
    std::vector<char> m(mdp.state_count());
    for (StateId s = 0; s < mdp.state_count(); ++s) m[s] = b.evaluate(mdp.valuation(s));
    return m;
}

Expr any_flag(const PtaNetwork& net) {
    Expr e = Expr::constant(false);
    for (const auto& m : net.modules) e = Expr::disj(e, Expr::variable(m.flags[0]));
    return e;
}

}  // namespace

TEST_CASE("single module reproduces every table knot") {
    for (const auto& cdf : oracle::table1_all()) {
        auto mdp = compose(oracle::series_chain({cdf}));
        auto target = parse_expr("flag_m0");
        for (const auto& knot : cdf.points()) {
            auto r = check_bounded_reachability(mdp, {target, knot.tick, OptMode::Max});
            CHECK(r.probability == knot.cumulative);
            if (knot.tick > 0) {
                auto before = check_bounded_reachability(mdp, {target, knot.tick - 1, OptMode::Max});
                CHECK(before.probability < knot.cumulative);
            }
        }
    }
    auto mdp = compose(oracle::series_chain({table1::communication()}));
    auto target = parse_expr("flag_m0");
    CHECK(check_bounded_reachability(mdp, {target, 160}).probability == parse_probability("0.98"));
    CHECK(check_bounded_reachability(mdp, {target, 169}).probability == parse_probability("0.9999999995"));
}

TEST_CASE("single module equals prob_at_most at every bound") {
    auto cdf = table1::sensor_fetch();
    auto pmf = cdf_to_pmf(cdf);
    auto mdp = compose(oracle::series_chain({cdf}));
    auto target = parse_expr("flag_m0");
    auto profile = reachability_profile(mdp, target, 210);
    for (Tick t = 0; t <= 210; ++t) CHECK(profile[static_cast<size_t>(t)] == prob_at_most(pmf, t));
    // the layered sweep agrees with the profile on a sample of bounds
    for (Tick t : {0, 149, 150, 171, 189, 190, 200, 210})
        CHECK(check_bounded_reachability(mdp, {target, t}).probability == profile[static_cast<size_t>(t)]);
}

TEST_CASE("bound zero and monotonicity") {
    auto mdp = compose(oracle::series_chain({table1::communication(), table1::sensor_fetch()}));
    auto target = parse_expr("flag_m1");
    CHECK(check_bounded_reachability(mdp, {target, 0}).probability == 0);
    auto maxp = reachability_profile(mdp, target, 420, OptMode::Max);
    auto minp = reachability_profile(mdp, target, 420, OptMode::Min);
    for (size_t t = 1; t < maxp.size(); ++t) {
        CHECK(maxp[t] >= maxp[t - 1]);
        CHECK(minp[t] <= maxp[t]);
    }
    CHECK(maxp.back() == 1);
}

TEST_CASE("series chains equal the convolution at every bound") {
    const std::vector<DelayCdf> pool{table1::sensor_fetch(), table1::communication(), table1::communication(),
                                     table1::sensor_fetch()};
    for (size_t k = 2; k <= 4; ++k) {
        std::vector<DelayCdf> chain(pool.begin(), pool.begin() + static_cast<long>(k));
        std::vector<DelayPmf> pmfs;
        for (const auto& c : chain) pmfs.push_back(cdf_to_pmf(c));
        auto conv = convolve_all(pmfs);
        auto mdp = compose(oracle::series_chain(chain));
        auto target = parse_expr("flag_m" + std::to_string(k - 1));
        auto profile = reachability_profile(mdp, target, conv.max_tick() + 2);
        for (Tick t = 0; t < static_cast<Tick>(profile.size()); ++t)
            CHECK(profile[static_cast<size_t>(t)] == prob_at_most(conv, t));
    }
}

TEST_CASE("density sweep") {
    auto cdf = table1::communication();
    auto mdp = compose(oracle::series_chain({cdf}));
    auto target = parse_expr("flag_m0");
    std::vector<Tick> grid{100, 150, 160, 165, 169, 200, 250};
    auto d = density_sweep(mdp, target, grid);
    REQUIRE(d.points.size() == grid.size());
    Probability sum = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(d.points[i].bound == grid[i]);
        CHECK(d.points[i].cumulative == prob_at_most(cdf_to_pmf(cdf), grid[i]));
        CHECK(d.points[i].density >= 0);
        sum += d.points[i].density;
    }
    CHECK(sum == d.points.back().cumulative);
    CHECK(d.points[4].density == parse_probability("0.0049999995"));
    auto bins = d.bins();
    REQUIRE(bins.size() == grid.size());
    CHECK(bins[0].start == 0);
    CHECK_THROWS_AS(density_sweep(mdp, target, {20, 10}), CheckError);
}

TEST_CASE("bounds outside the horizon are rejected") {
    auto mdp = compose(oracle::series_chain({table1::communication()}));
    auto target = parse_expr("flag_m0");
    CHECK_THROWS_AS(check_bounded_reachability(mdp, {target, -1}), CheckError);
    CheckOptions small;
    small.horizon_cap = 100;
    CHECK_THROWS_AS(check_bounded_reachability(mdp, {target, 101}, small), CheckError);
    CHECK_THROWS(check_bounded_reachability(mdp, {parse_expr("nosuch"), 10}));
}

TEST_CASE("horizon cap from the environment") {
    setenv("PRTSPACE_HORIZON_CAP", "1234", 1);
    CHECK(default_horizon_cap() == 1234);
    unsetenv("PRTSPACE_HORIZON_CAP");
    CHECK(default_horizon_cap() == 100000);
}

TEST_CASE("double arithmetic tracks exact arithmetic") {
    auto mdp = compose(oracle::series_chain({table1::communication(), table1::communication()}));
    auto target = parse_expr("flag_m1");
    CheckOptions dbl;
    dbl.arithmetic = Arithmetic::Double;
    for (Tick t : {300, 315, 330, 338, 400}) {
        auto exact = check_bounded_reachability(mdp, {target, t});
        auto approx = check_bounded_reachability(mdp, {target, t}, dbl);
        CHECK(std::abs(to_double(exact.probability) - to_double(approx.probability)) < 1e-12);
    }
}

TEST_CASE("value iteration matches path enumeration on random networks") {
    std::mt19937_64 rng(20240601);
    int accepted = 0, attempts = 0, fractional = 0, gaps = 0;
    while (accepted < 200 && attempts < 5000) {
        ++attempts;
        auto net = oracle::random_network(rng);
        ComposeOptions opts;
        // window semantics leaves the firing time to the scheduler
        if (attempts % 2) opts.semantics = TimingSemantics::Window;
        DigitalMdp mdp;
        try {
            mdp = compose(net, opts);
        } catch (const ModelError&) {
            continue;  // zero-time cycles
        }
        auto target = any_flag(net);
        auto mask = mask_of(mdp, target);
        Tick bound = static_cast<Tick>(rng() % 12);
        Probability seen[2];
        for (OptMode mode : {OptMode::Max, OptMode::Min}) {
            auto r = check_bounded_reachability(mdp, {target, bound, mode});
            seen[mode == OptMode::Max] = r.probability;
            CHECK(r.states_explored <= 100000u);
            oracle::PathEnumerator paths(mdp, mask, mode == OptMode::Max);
            CHECK(std::abs(to_double(r.probability) - paths.value(mdp.initial, bound)) < 1e-10);
        }
        if (seen[1] > 0 && seen[1] < 1) ++fractional;
        if (seen[0] != seen[1]) ++gaps;
        ++accepted;
    }
    CHECK(accepted >= 20);
    // the sample exercises probabilistic branching and scheduler choice
    CHECK(fractional >= 10);
    CHECK(gaps >= 5);
    MESSAGE(accepted << " networks, " << fractional << " fractional, " << gaps << " with a min/max gap");
}

namespace {

// Hand-built MDP over one variable `s`; target is s = goal.
DigitalMdp hand_mdp(int states, std::vector<std::vector<MdpAction>> actions) {
    DigitalMdp mdp;
    mdp.variables = {"s"};
    for (int s = 0; s < states; ++s) mdp.valuations.push_back(s);
    mdp.actions = std::move(actions);
    return mdp;
}

MdpAction act(bool tick, std::vector<std::pair<Probability, StateId>> branches) {
    MdpAction a;
    a.tick = tick;
    for (auto& [p, t] : branches) a.branches.push_back({p, to_double(p), t});
    return a;
}

}  // namespace

TEST_CASE("three-state MDP with one probabilistic branch") {
    // 0 --tick--> {0.3: 2 (goal), 0.7: 1}; 1 --tick--> 2
    Probability p3(3, 10), p7(7, 10);
    auto mdp = hand_mdp(3, {{act(true, {{p3, 2}, {p7, 1}})}, {act(true, {{Probability(1), 2}})}, {}});
    auto goal = parse_expr("s = 2");
    CHECK(check_bounded_reachability(mdp, {goal, 0}).probability == 0);
    CHECK(check_bounded_reachability(mdp, {goal, 1}).probability == p3);
    CHECK(check_bounded_reachability(mdp, {goal, 2}).probability == 1);
    oracle::PathEnumerator paths(mdp, mask_of(mdp, goal), true);
    CHECK(paths.value(0, 1) == doctest::Approx(0.3));
}

TEST_CASE("min_max_gap separates a choice between delays 1 and 3") {
    // 0 chooses: zero-time to 1 (one tick to goal) or to 2 (three ticks to goal)
    Probability one(1);
    auto mdp = hand_mdp(6, {{act(false, {{one, 1}}), act(false, {{one, 2}})},
                            {act(true, {{one, 5}})},
                            {act(true, {{one, 3}})},
                            {act(true, {{one, 4}})},
                            {act(true, {{one, 5}})},
                            {}});
    auto [lo, hi] = min_max_gap(mdp, parse_expr("s = 5"), 2);
    CHECK(lo == 0);
    CHECK(hi == 1);
    auto [lo3, hi3] = min_max_gap(mdp, parse_expr("s = 5"), 3);
    CHECK(lo3 == 1);
    CHECK(hi3 == 1);
}

TEST_CASE("point mass: one nonzero density bin") {
    std::vector<CdfPoint> pts{{42, Probability(1)}};
    auto mdp = compose(oracle::series_chain({DelayCdf(pts)}));
    auto d = density_sweep(mdp, parse_expr("flag_m0"), {10, 40, 50, 60});
    int nonzero = 0;
    for (const auto& p : d.points) nonzero += p.density != 0;
    CHECK(nonzero == 1);
    CHECK(d.points[2].density == 1);
    auto [lo, hi] = min_max_gap(mdp, parse_expr("flag_m0"), 200);
    CHECK(lo == 1);
    CHECK(hi == 1);
}
