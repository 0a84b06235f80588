#include "oracles.hpp"

#include "prtspace/textio.hpp"

#include <doctest.h>

#include <algorithm>

using namespace prtspace;

namespace {

Prtesm control_unit() {
    auto doc = parse_model(oracle::read_file(oracle::source_path("models/control_unit.prt")));
    REQUIRE(doc.ok());
    return *doc.document->find_machine("Control_Unit");
}

bool has_code(const std::vector<ModelDiagnostic>& d, ModelDiagnostic::Code c) {
    return std::any_of(d.begin(), d.end(), [&](const auto& x) { return x.code == c; });
}

const PtaCommand* command_at(const PtaModule& m, int location, const std::string& label) {
    for (const auto& c : m.commands)
        if (c.location == location && c.label == label) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("validate_prtesm accepts the control unit") { CHECK(validate_prtesm(control_unit()).empty()); }

TEST_CASE("validate_prtesm reports each violation") {
    Prtesm m;
    m.name = "Broken";
    m.states = {"idle", "idle", "lost"};
    m.clocks = {"x"};
    m.transitions.push_back({"idle", "nowhere", std::nullopt, {"y"}, ClockInterval{"z", 5, 2}, std::nullopt});
    auto d = validate_prtesm(m);
    CHECK(has_code(d, ModelDiagnostic::Code::DuplicateState));
    CHECK(has_code(d, ModelDiagnostic::Code::MissingInitial));
    CHECK(has_code(d, ModelDiagnostic::Code::UnknownState));
    CHECK(has_code(d, ModelDiagnostic::Code::UndeclaredClock));
    for (const auto& x : d) CHECK((x.state.has_value() || x.transition.has_value() ||
                                   x.code == ModelDiagnostic::Code::MissingInitial));

    Prtesm u;
    u.name = "U";
    u.states = {"initial", "island"};
    auto du = validate_prtesm(u);
    REQUIRE(du.size() == 1);
    CHECK(du[0].code == ModelDiagnostic::Code::UnreachableState);
    CHECK(du[0].state == 1u);
}

TEST_CASE("control unit transformation has the published layout") {
    std::map<std::string, DelayCdf> dists{{"sensePerson", table1::communication()},
                                          {"setNormal", table1::communication()},
                                          {"setYellow", table1::communication()},
                                          {"setRed", table1::communication()}};
    auto r = prtesm_to_pta(control_unit(), {"sensePerson", "setNormal", "setYellow", "setRed"}, dists,
                           TransformOptions{"c2", "i"});
    const auto& m = r.module;
    CHECK(m.name == "c2_Control_Unit_prtesm");
    CHECK(m.location_var == "s_c2");
    CHECK(m.max_location == 10);
    CHECK(m.clocks == std::vector<std::string>{"c_c2"});
    CHECK(m.flags == std::vector<std::string>{"flag_c2"});

    REQUIRE(r.tick_constants.size() == 5);
    CHECK(r.tick_constants[0].name == "c2_1");
    CHECK(r.tick_constants[0].value == 150);
    CHECK(r.tick_constants[3].value == 169);
    CHECK(r.prob_constants[3].name == "c2_r4");
    CHECK(r.prob_constants[3].value == parse_probability("0.9999999995"));

    // Init transitions leave location 0 on [i].
    int init = 0;
    for (const auto& c : m.commands)
        if (c.location == 0) {
            CHECK(c.label == "i");
            ++init;
        }
    CHECK(init == 2);

    // Arming commands reset the clock.
    for (const char* pin : {"sensePerson", "setNormal", "setYellow", "setRed"}) {
        const auto* arm = command_at(m, 3, pin);
        REQUIRE(arm);
        CHECK(arm->branches.size() == 1);
        CHECK(arm->branches[0].update.location == 4);
        CHECK(arm->branches[0].update.resets == std::vector<std::string>{"c_c2"});
    }

    // One probabilistic choice with five branches summing to 1.
    const auto* choose = command_at(m, 4, "");
    REQUIRE(choose);
    REQUIRE(choose->branches.size() == 5);
    Probability total = 0;
    for (size_t i = 0; i < 5; ++i) {
        total += choose->branches[i].prob;
        CHECK(choose->branches[i].update.location == static_cast<int>(5 + i));
    }
    CHECK(total == 1);
    CHECK(choose->branches[4].prob == parse_probability("5e-10"));

    // Contiguous closed windows [t_{i-1}, t_i].
    const Tick ticks[] = {150, 160, 165, 169, 200};
    for (int i = 0; i < 5; ++i) {
        const auto* done = command_at(m, 5 + i, "");
        REQUIRE(done);
        CHECK(done->branches[0].update.location == 10);
        Tick lo = 0, hi = -1;
        for (const auto& g : done->clock_guard) (g.rel == ClockRel::Ge ? lo : hi) = g.value;
        CHECK(lo == (i == 0 ? 0 : ticks[i - 1]));
        CHECK(hi == ticks[i]);
    }
    const auto* flag = command_at(m, 10, "");
    REQUIRE(flag);
    CHECK(flag->branches[0].update.flags == std::vector<std::pair<std::string, bool>>{{"flag_c2", true}});
}

TEST_CASE("point mass gives a four-location module") {
    std::vector<CdfPoint> one{{169, Probability(1)}};
    auto r = prtesm_to_pta(oracle::single_action_machine("P"), std::vector<std::string>{"out"},
                           {{"out", DelayCdf(one)}});
    CHECK(r.module.max_location == 3);
    const auto* done = command_at(r.module, 2, "");
    REQUIRE(done);
    REQUIRE(done->branches.size() == 1);
    CHECK(done->branches[0].prob == 1);
    CHECK(done->branches[0].update.location == 3);
}

TEST_CASE("transformation rejects bad bindings") {
    auto m = oracle::single_action_machine("P");
    std::map<std::string, DelayCdf> d{{"out", table1::communication()}};
    CHECK_THROWS_AS(prtesm_to_pta(m, std::vector<std::string>{"missing"}, d), ModelError);
    CHECK_THROWS_AS(prtesm_to_pta(m, std::vector<std::string>{}, d), ModelError);
    Prtesm bad = m;
    bad.states.push_back("orphan");
    CHECK_THROWS_AS(prtesm_to_pta(bad, std::vector<std::string>{"out"}, d), ModelError);
}

TEST_CASE("sanitize_identifier") {
    CHECK(sanitize_identifier("Control Unit") == "Control_Unit");
    CHECK(sanitize_identifier("a-b.c") == "a_b_c");
}

TEST_CASE("validate_network catches dangling references") {
    auto net = oracle::series_chain({table1::communication()});
    CHECK_NOTHROW(validate_network(net));
    auto missing_label = net;
    missing_label.sync_alphabet.clear();
    CHECK_THROWS_AS(validate_network(missing_label), ModelError);
    auto bad_prob = net;
    for (auto& c : bad_prob.modules[0].commands)
        if (c.branches.size() > 1) c.branches[0].prob += Probability(1, 100);
    CHECK_THROWS_AS(validate_network(bad_prob), ModelError);
    auto bad_const = net;
    bad_const.tick_constants[0].value += 1;
    CHECK_THROWS_AS(validate_network(bad_const), ModelError);
}

TEST_CASE("compose is deterministic and finite") {
    auto net = oracle::series_chain({table1::communication(), table1::sensor_fetch()});
    auto a = compose(net), b = compose(net);
    CHECK(a.dump() == b.dump());
    auto bound = saturate_clock_bound(net);
    size_t limit = 1;
    for (const auto& m : net.modules) limit *= static_cast<size_t>(m.max_location + 1) * 2;
    for (const auto& [clock, c] : bound) limit *= static_cast<size_t>(c + 1);
    CHECK(a.state_count() <= limit);
    CHECK_NOTHROW(validate_mdp(a));
}

TEST_CASE("zero-time cycles are rejected") {
    PtaNetwork net;
    PtaModule m;
    m.name = "loop";
    m.location_var = "s";
    m.max_location = 1;
    m.commands.push_back({"", 0, {}, {{Probability(1), {1, {}, {}}}}});
    m.commands.push_back({"", 1, {}, {{Probability(1), {0, {}, {}}}}});
    net.modules.push_back(m);
    CHECK_THROWS_AS(compose(net), ModelError);
}

TEST_CASE("single-module paths reach the flag at support ticks with their masses") {
    for (const auto& cdf : oracle::table1_all()) {
        auto net = oracle::series_chain({cdf});
        auto mdp = compose(net);
        // Walk every path: zero-time choices, ticks, branch probabilities.
        BoundExpr flag(parse_expr("flag_m0"), mdp.variables);
        std::map<Tick, Probability> reached;
        struct Item {
            StateId s;
            Tick t;
            Probability p;
        };
        std::vector<Item> stack{{mdp.initial, 0, Probability(1)}};
        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            if (flag.evaluate(mdp.valuation(it.s))) {
                reached[it.t] += it.p;
                continue;
            }
            const auto& acts = mdp.actions[it.s];
            REQUIRE(acts.size() == 1);  // urgency leaves no choice in a lone module
            for (const auto& b : acts[0].branches) stack.push_back({b.target, it.t + (acts[0].tick ? 1 : 0), it.p * b.prob});
        }
        CHECK(reached == oracle::table_masses(cdf));
    }
}

TEST_CASE("two modules synchronizing on [i] match the product of their steps") {
    Prtesm a = oracle::single_action_machine("A");
    Prtesm b = oracle::single_action_machine("B");
    std::vector<CdfPoint> pa{{3, Probability(1, 2)}, {5, Probability(1)}};
    std::vector<CdfPoint> pb{{4, Probability(1, 4)}, {6, Probability(1)}};
    std::vector<TransformResult> parts;
    parts.push_back(prtesm_to_pta(a, std::vector<CommBinding>{{"out", DelayCdf(pa), "go_a", ""}}, {"a", "i"}));
    parts.push_back(prtesm_to_pta(b, std::vector<CommBinding>{{"out", DelayCdf(pb), "go_b", ""}}, {"b", "i"}));
    auto net = assemble_network(std::move(parts));
    CHECK(std::find(net.sync_alphabet.begin(), net.sync_alphabet.end(), "i") != net.sync_alphabet.end());
    auto mdp = compose(net);

    // Independent delays: both flags by T is P(A<=T) P(B<=T).
    auto both = parse_expr("flag_a & flag_b");
    auto either = parse_expr("flag_a | flag_b");
    std::map<Tick, Probability> ma{{3, Probability(1, 2)}, {5, Probability(1, 2)}};
    std::map<Tick, Probability> mb{{4, Probability(1, 4)}, {6, Probability(3, 4)}};
    for (Tick t = 0; t <= 7; ++t) {
        Probability pa_t = oracle::mass_at_most(ma, t), pb_t = oracle::mass_at_most(mb, t);
        auto r = check_bounded_reachability(mdp, {both, t, OptMode::Max});
        CHECK(r.probability == pa_t * pb_t);
        auto r2 = check_bounded_reachability(mdp, {either, t, OptMode::Min});
        CHECK(r2.probability == 1 - (1 - pa_t) * (1 - pb_t));
    }
}
