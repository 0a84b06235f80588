#include "prtspace/distributions.hpp"

#include <cmath>
#include <map>

namespace prtspace {

DelayCdf::DelayCdf(std::vector<CdfPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw DistributionError("cumulative distribution needs at least one point");
    Probability previous = 0;
    for (size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (p.tick < 0) throw DistributionError("negative tick " + std::to_string(p.tick));
        if (i > 0 && p.tick <= points_[i - 1].tick)
            throw DistributionError("ticks must be strictly increasing (at " + std::to_string(p.tick) + ")");
        if (!is_unit_interval(p.cumulative))
            throw DistributionError("cumulative probability " + to_exact_string(p.cumulative) + " outside [0,1]");
        if (p.cumulative < previous)
            throw DistributionError("cumulative probability decreases at tick " + std::to_string(p.tick));
        previous = p.cumulative;
    }
    if (points_.back().cumulative != 1)
        throw DistributionError("final cumulative probability is " + to_exact_string(points_.back().cumulative) +
                                ", expected 1");
}

DelayPmf::DelayPmf(std::vector<Mass> masses) : masses_(std::move(masses)) {
    if (masses_.empty()) throw DistributionError("distribution needs at least one mass");
    Probability sum = 0;
    for (size_t i = 0; i < masses_.size(); ++i) {
        const auto& m = masses_[i];
        if (m.tick < 0) throw DistributionError("negative tick " + std::to_string(m.tick));
        if (i > 0 && m.tick <= masses_[i - 1].tick)
            throw DistributionError("ticks must be strictly increasing (at " + std::to_string(m.tick) + ")");
        if (m.prob <= 0 || m.prob > 1)
            throw DistributionError("mass " + to_exact_string(m.prob) + " at tick " + std::to_string(m.tick) +
                                    " outside (0,1]");
        sum += m.prob;
    }
    if (sum != 1) throw DistributionError("masses sum to " + to_exact_string(sum) + ", expected 1");
}

DelayPmf DelayPmf::point_mass(Tick tick) { return DelayPmf({{tick, Probability(1)}}); }

Probability DelayPmf::total() const {
    Probability sum = 0;
    for (const auto& m : masses_) sum += m.prob;
    return sum;
}

DelayPmf cdf_to_pmf(const DelayCdf& cdf) {
    std::vector<Mass> masses;
    Probability previous = 0;
    for (const auto& p : cdf.points()) {
        Probability mass = p.cumulative - previous;
        if (mass > 0) masses.push_back({p.tick, mass});
        previous = p.cumulative;
    }
    return DelayPmf(std::move(masses));
}

DelayCdf pmf_to_cdf(const DelayPmf& pmf) {
    std::vector<CdfPoint> points;
    Probability running = 0;
    for (const auto& m : pmf.masses()) {
        running += m.prob;
        points.push_back({m.tick, running});
    }
    return DelayCdf(std::move(points));
}

DelayPmf convolve(const DelayPmf& a, const DelayPmf& b) {
    std::map<Tick, Probability> acc;
    for (const auto& x : a.masses())
        for (const auto& y : b.masses()) acc[x.tick + y.tick] += x.prob * y.prob;
    std::vector<Mass> masses;
    masses.reserve(acc.size());
    for (auto& [tick, prob] : acc) masses.push_back({tick, std::move(prob)});
    return DelayPmf(std::move(masses));
}

DelayPmf convolve_all(std::span<const DelayPmf> pmfs) {
    if (pmfs.empty()) throw DistributionError("convolve_all needs at least one distribution");
    DelayPmf result = pmfs.front();
    for (const auto& next : pmfs.subspan(1)) result = convolve(result, next);
    return result;
}

Probability prob_at_most(const DelayPmf& pmf, Tick t) {
    Probability sum = 0;
    for (const auto& m : pmf.masses()) {
        if (m.tick > t) break;
        sum += m.prob;
    }
    return sum;
}

std::vector<HistogramBin> histogram(const DelayPmf& pmf, Tick bin_width) {
    if (bin_width <= 0) throw DistributionError("bin width must be positive");
    Tick first = pmf.min_tick() / bin_width;
    Tick last = pmf.max_tick() / bin_width;
    std::vector<HistogramBin> bins;
    bins.reserve(static_cast<size_t>(last - first + 1));
    for (Tick k = first; k <= last; ++k) bins.push_back({k * bin_width, bin_width, Probability(0)});
    for (const auto& m : pmf.masses()) bins[static_cast<size_t>(m.tick / bin_width - first)].mass += m.prob;
    return bins;
}

Tick seconds_to_ticks(double seconds) {
    double ticks = seconds / kSecondsPerTick;
    double rounded = std::round(ticks);
    if (!std::isfinite(ticks) || std::abs(ticks - rounded) > 1e-6)
        throw DistributionError("time " + std::to_string(seconds) + " s is not a whole number of 100 us ticks");
    return static_cast<Tick>(rounded);
}

double ticks_to_seconds(Tick ticks) { return static_cast<double>(ticks) * kSecondsPerTick; }

namespace table1 {
namespace {
DelayCdf make(std::initializer_list<std::pair<Tick, const char*>> rows) {
    std::vector<CdfPoint> points;
    for (const auto& [tick, percent] : rows) points.push_back({tick, parse_probability(std::string(percent) + "%")});
    return DelayCdf(std::move(points));
}
}  // namespace

DelayCdf sensor_fetch() { return make({{150, "10"}, {170, "40"}, {180, "85"}, {190, "99.998"}, {200, "100"}}); }

DelayCdf recognition() {
    return make({{2500, "10"}, {2600, "30"}, {2700, "60"}, {2800, "90"}, {2850, "99"}, {2900, "100"}});
}

DelayCdf communication() {
    return make({{150, "80"}, {160, "98"}, {165, "99.5"}, {169, "99.99999995"}, {200, "100"}});
}

DelayCdf robot_processing() {
    return make({{1500, "5"}, {1590, "90"}, {1600, "95"}, {1650, "99.9995"}, {1700, "100"}});
}
}  // namespace table1

}  // namespace prtspace
