#pragma once

// Probability-annotated occupancy specifications in the BeSpaceD style and
// equal-time collision checking between two of them.

#include "prtspace/distributions.hpp"
#include "prtspace/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace prtspace {

class SpatialError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct OccupancyEntry {
    std::int64_t time_us = 0;
    Box2 box;
    double probability = 1.0;

    friend bool operator==(const OccupancyEntry&, const OccupancyEntry&) = default;
};

struct SpatioTemporalSpec {
    std::string entity;
    std::vector<OccupancyEntry> entries;  // sorted by time; equal times allowed

    /// Throws SpatialError on unsorted times, degenerate boxes or bad probabilities.
    void validate() const;
    friend bool operator==(const SpatioTemporalSpec&, const SpatioTemporalSpec&) = default;
};

struct CollisionEvent {
    std::int64_t time_us = 0;
    Box2 a, b, overlap;
    double joint_probability = 0.0;

    double time() const { return static_cast<double>(time_us) * 1e-6; }
};

enum class Entity { Robot, Human };

/// One entry per trace record (records without a human are skipped for Human).
SpatioTemporalSpec trace_to_spec(const std::vector<TraceRecord>& trace, Entity entity, double probability = 1.0);

/// All equal-time entry pairs whose boxes overlap with positive area, sorted
/// by time. Joint probability is the product (the two entities are assumed
/// independent). Throws SpatialError when the two specs sample different
/// cadences or phases.
std::vector<CollisionEvent> check_collision(const SpatioTemporalSpec& a, const SpatioTemporalSpec& b);

/// Keeps events with joint probability >= epsilon, order preserved.
std::vector<CollisionEvent> threshold_filter(const std::vector<CollisionEvent>& events, double epsilon);

struct SpeedErrorLevel {
    double cumulative = 1.0;  // probability the error is within max_error
    double max_error = 0.0;   // m/s
};

struct WidenedSpec {
    double level = 1.0;
    SpatioTemporalSpec spec;
};

struct WidenOptions {
    /// Seconds after the first entry to keep; entries beyond are dropped.
    std::optional<double> horizon;
    /// Clamp widened boxes to these bounds.
    std::optional<Box2> bounds;
};

/// For each cumulative level (ascending), boxes at time t are widened along x
/// by +-max_error * (t - t0) and carry probability level * original.
std::vector<WidenedSpec> widen_by_speed_error(const SpatioTemporalSpec& spec, const std::vector<SpeedErrorLevel>& levels,
                                              const WidenOptions& options = {});

// BeSpaceD-form text: one block per distinct time,
//   time = <seconds> ->
//     occupied box [x1,x2]x[y1,y2] with probability p
//   ...
// The reader also accepts one optional leading `entity <name>` line (the
// exporter does not write it). Lines starting with '#' are comments.
void export_bespaced(std::ostream& out, const SpatioTemporalSpec& spec);
std::string export_bespaced(const SpatioTemporalSpec& spec);

class BespacedFormatError : public std::runtime_error {
public:
    BespacedFormatError(const std::string& message, std::size_t line) : std::runtime_error(message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

SpatioTemporalSpec read_bespaced(std::istream& in);
SpatioTemporalSpec read_bespaced(const std::string& text);

/// Probability that the delay is at least `threshold` ticks.
Probability prob_at_least(const DelayPmf& pmf, Tick threshold);

}  // namespace prtspace
