#pragma once

// Discrete delay distributions over integer time ticks.
//
// One tick is 100 microseconds, so 16.9 ms is tick 169. Distributions are
// given either accumulatively (DelayCdf, the shape of a delay table) or as
// point masses (DelayPmf). Both validate their invariants on construction
// and are immutable afterwards.

#include "prtspace/probability.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prtspace {

using Tick = std::int64_t;

inline constexpr double kSecondsPerTick = 1e-4;

class DistributionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CdfPoint {
    Tick tick = 0;
    Probability cumulative;
    friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

struct Mass {
    Tick tick = 0;
    Probability prob;
    friend bool operator==(const Mass&, const Mass&) = default;
};

class DelayCdf {
public:
    /// Ticks strictly increasing and >= 0, cumulative values non-decreasing in
    /// [0,1] and ending at exactly 1.
    explicit DelayCdf(std::vector<CdfPoint> points);

    const std::vector<CdfPoint>& points() const { return points_; }
    Tick min_tick() const { return points_.front().tick; }
    Tick max_tick() const { return points_.back().tick; }

    friend bool operator==(const DelayCdf&, const DelayCdf&) = default;

private:
    std::vector<CdfPoint> points_;
};

class DelayPmf {
public:
    /// Ticks strictly increasing and >= 0, every mass in (0,1], total exactly 1.
    explicit DelayPmf(std::vector<Mass> masses);

    static DelayPmf point_mass(Tick tick);

    const std::vector<Mass>& masses() const { return masses_; }
    Tick min_tick() const { return masses_.front().tick; }
    Tick max_tick() const { return masses_.back().tick; }
    Probability total() const;

    friend bool operator==(const DelayPmf&, const DelayPmf&) = default;

private:
    std::vector<Mass> masses_;
};

struct HistogramBin {
    Tick start = 0;
    Tick width = 1;
    Probability mass;
    friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

/// Successive differences of the cumulative values; zero-mass steps dropped.
DelayPmf cdf_to_pmf(const DelayCdf& cdf);

/// Running sums of the masses.
DelayCdf pmf_to_cdf(const DelayPmf& pmf);

/// Distribution of the sum of two independent delays.
DelayPmf convolve(const DelayPmf& a, const DelayPmf& b);

/// Left fold of convolve over a non-empty list.
DelayPmf convolve_all(std::span<const DelayPmf> pmfs);

/// P(delay <= t).
Probability prob_at_most(const DelayPmf& pmf, Tick t);

/// Bins [k*w, (k+1)*w) from the bin holding the minimum support tick to the
/// one holding the maximum; empty interior bins are kept with mass 0.
std::vector<HistogramBin> histogram(const DelayPmf& pmf, Tick bin_width);

/// Converts seconds to ticks, rejecting values that are not whole ticks
/// (up to floating-point noise).
Tick seconds_to_ticks(double seconds);
double ticks_to_seconds(Tick ticks);

/// The four accumulative delay tables used by the moving-robot example
/// (sensor fetch, recognition processing, communication to the robot,
/// robot processing and actuation).
namespace table1 {
DelayCdf sensor_fetch();
DelayCdf recognition();
DelayCdf communication();
DelayCdf robot_processing();
}  // namespace table1

}  // namespace prtspace
