#include "oracles.hpp"

#include <doctest.h>

using namespace prtspace;

namespace {

// Delay tables as published: (ms, percent).
struct Row {
    const char* ms;
    const char* percent;
};
const std::vector<std::vector<Row>> kPaperTable = {
    {{"15", "10"}, {"17", "40"}, {"18", "85"}, {"19", "99.998"}, {"20", "100"}},
    {{"250", "10"}, {"260", "30"}, {"270", "60"}, {"280", "90"}, {"285", "99"}, {"290", "100"}},
    {{"15", "80"}, {"16", "98"}, {"16.5", "99.5"}, {"16.9", "99.99999995"}, {"20", "100"}},
    {{"150", "5"}, {"159", "90"}, {"160", "95"}, {"165", "99.9995"}, {"170", "100"}},
};

DelayCdf cdf(std::initializer_list<std::pair<Tick, const char*>> rows) {
    std::vector<CdfPoint> pts;
    for (auto [t, p] : rows) pts.push_back({t, parse_probability(p)});
    return DelayCdf(pts);
}

DelayPmf random_pmf(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n(1, 6), gap(1, 40), w(1, 50);
    int count = n(rng);
    std::vector<int> weights;
    int total = 0;
    for (int i = 0; i < count; ++i) total += weights.emplace_back(w(rng));
    std::vector<Mass> masses;
    Tick t = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < count; ++i) {
        Probability p(weights[i], total);
        p.canonicalize();
        masses.push_back({t, p});
        t += gap(rng);
    }
    return DelayPmf(masses);
}

}  // namespace

TEST_CASE("table 1 matches the published rows") {
    auto tables = oracle::table1_all();
    REQUIRE(tables.size() == kPaperTable.size());
    for (size_t k = 0; k < tables.size(); ++k) {
        const auto& pts = tables[k].points();
        REQUIRE(pts.size() == kPaperTable[k].size());
        for (size_t i = 0; i < pts.size(); ++i) {
            // ms -> ticks of 0.1 ms, percent -> fraction
            Probability ms = parse_probability(kPaperTable[k][i].ms);
            CHECK(Probability(pts[i].tick) == ms * 10);
            CHECK(pts[i].cumulative * 100 == parse_probability(kPaperTable[k][i].percent));
        }
    }
}

TEST_CASE("communication masses survive subtraction exactly") {
    auto pmf = cdf_to_pmf(table1::communication());
    REQUIRE(pmf.masses().size() == 5);
    CHECK(pmf.masses()[0].prob == parse_probability("0.8"));
    CHECK(pmf.masses()[1].prob == parse_probability("0.18"));
    CHECK(pmf.masses()[2].prob == parse_probability("0.015"));
    CHECK(pmf.masses()[3].prob == parse_probability("0.0049999995"));
    CHECK(pmf.masses()[4].prob == parse_probability("5e-10"));
    CHECK(to_exact_string(pmf.masses()[3].prob) == "0.0049999995");
    CHECK(pmf.total() == 1);
}

TEST_CASE("four-way convolution equals enumeration of all outcome tuples") {
    std::vector<DelayPmf> pmfs;
    std::vector<std::map<Tick, Probability>> parts;
    for (const auto& c : oracle::table1_all()) {
        pmfs.push_back(cdf_to_pmf(c));
        parts.push_back(oracle::table_masses(c));
    }
    size_t tuples = 0;
    auto expected = oracle::enumerate_sum(parts, &tuples);
    CHECK(tuples == 750);
    auto got = convolve_all(pmfs);
    CHECK(got.min_tick() == 4300);
    CHECK(got.max_tick() == 5000);
    REQUIRE(got.masses().size() == expected.size());
    for (const auto& m : got.masses()) CHECK(m.prob == expected.at(m.tick));
}

TEST_CASE("cdf validation") {
    CHECK_THROWS_AS(DelayCdf({}), DistributionError);
    CHECK_THROWS_AS(cdf({{10, "0.5"}, {5, "1"}}), DistributionError);
    CHECK_THROWS_AS(cdf({{10, "0.5"}, {20, "0.4"}, {30, "1"}}), DistributionError);
    CHECK_THROWS_AS(cdf({{10, "0.5"}, {20, "0.9"}}), DistributionError);
    CHECK_THROWS_AS(cdf({{-1, "1"}}), DistributionError);
    CHECK_THROWS_AS(DelayPmf({{1, Probability(1, 2)}, {2, Probability(1, 3)}}), DistributionError);
    CHECK_THROWS_AS(DelayPmf({{1, Probability(0)}, {2, Probability(1)}}), DistributionError);
}

TEST_CASE("zero-mass steps are dropped") {
    auto pmf = cdf_to_pmf(cdf({{10, "0.5"}, {20, "0.5"}, {30, "1"}}));
    REQUIRE(pmf.masses().size() == 2);
    CHECK(pmf.masses()[1].tick == 30);
}

TEST_CASE("point mass") {
    auto pmf = cdf_to_pmf(cdf({{169, "1"}}));
    CHECK(pmf == DelayPmf::point_mass(169));
    CHECK(prob_at_most(pmf, 168) == 0);
    CHECK(prob_at_most(pmf, 169) == 1);
}

TEST_CASE("histogram keeps empty interior bins") {
    auto pmf = cdf_to_pmf(table1::communication());
    auto bins = histogram(pmf, 10);
    REQUIRE(bins.size() == 6);  // 150..209
    CHECK(bins[0].start == 150);
    CHECK(bins[0].mass == parse_probability("0.8"));
    CHECK(bins[3].mass == 0);
    CHECK(bins[5].mass == parse_probability("5e-10"));
    CHECK_THROWS_AS(histogram(pmf, 0), DistributionError);
}

TEST_CASE("time conversion") {
    CHECK(seconds_to_ticks(0.0169) == 169);
    CHECK(seconds_to_ticks(0.46) == 4600);
    CHECK_THROWS_AS(seconds_to_ticks(0.00005), DistributionError);
    CHECK(ticks_to_seconds(165) == doctest::Approx(0.0165));
}

TEST_CASE("convolution properties on random distributions") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_pmf(rng), b = random_pmf(rng), c = random_pmf(rng);
        auto ab = convolve(a, b);
        CHECK(ab == convolve(b, a));
        CHECK(convolve(ab, c) == convolve(a, convolve(b, c)));
        CHECK(ab.total() == 1);
        CHECK(ab.min_tick() == a.min_tick() + b.min_tick());
        CHECK(ab.max_tick() == a.max_tick() + b.max_tick());

        // against tuple enumeration
        std::map<Tick, Probability> ma, mb;
        for (const auto& m : a.masses()) ma[m.tick] = m.prob;
        for (const auto& m : b.masses()) mb[m.tick] = m.prob;
        auto expected = oracle::enumerate_sum({ma, mb});
        for (const auto& m : ab.masses()) CHECK(m.prob == expected.at(m.tick));

        CHECK(cdf_to_pmf(pmf_to_cdf(a)) == a);
        CHECK(pmf_to_cdf(cdf_to_pmf(pmf_to_cdf(b))) == pmf_to_cdf(b));

        Probability prev = 0;
        for (Tick t = 0; t <= ab.max_tick(); ++t) {
            Probability p = prob_at_most(ab, t);
            CHECK(p >= prev);
            prev = p;
        }
        CHECK(prev == 1);

        Probability binned = 0;
        for (const auto& bin : histogram(ab, 1 + trial % 13)) binned += bin.mass;
        CHECK(binned == 1);
    }
}
