#pragma once

// Difference-equation simulation of the moving-robot scenario: a robot on a
// straight track, a human sprinting at it, and a three-mode safety controller
// whose decisions reach the robot after a lumped reaction delay.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prtspace {

class SimError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Box2 {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

    static Box2 centered(double cx, double cy, double width, double depth) {
        return {cx - width / 2, cx + width / 2, cy - depth / 2, cy + depth / 2};
    }
    double area() const { return (xmax - xmin) * (ymax - ymin); }
    /// Closed-box intersection (touching boxes intersect).
    bool touches(const Box2& o) const { return xmin <= o.xmax && o.xmin <= xmax && ymin <= o.ymax && o.ymin <= ymax; }
    Box2 clamped(const Box2& bounds) const;

    friend bool operator==(const Box2&, const Box2&) = default;
};

enum class Mode { Normal, Yellow, Red };

const char* mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view name);

struct ScenarioConfig {
    // Geometry (meters). The track runs along x at the hall's center line.
    double hall_width = 120.0;
    double hall_depth = 30.0;
    double robot_width = 2.0;
    double robot_depth = 2.0;
    double track_length = 100.0;
    double track_origin_x = 0.0;

    // Robot dynamics (m/s, m/s^2).
    double robot_max_speed = 10.0;
    double normal_accel = 5.0;
    double normal_decel = 5.0;
    double yellow_decel = 10.0;
    double red_decel = 15.0;
    double yellow_speed = 2.0;
    double creep_speed = 1.0;
    double creep_zone = 11.0;

    // Controller.
    double yellow_threshold = 25.0;
    double red_threshold = 10.0;
    double physics_step = 0.005;
    double poll_period = 0.010;
    double poll_phase = 0.0;
    double reaction_delay = 0.5;
    // Controller distance: between box edges (true) or between centers.
    bool edge_distance = false;

    // Human: appears at `human_entry_time` this far ahead of the robot along
    // the track (plus a lateral offset) and sprints straight at it.
    bool human_enabled = true;
    double human_speed = 10.0;
    double human_width = 0.5;
    double human_depth = 0.5;
    double human_entry_time = 1.75;
    double human_entry_distance = 25.01;
    double human_entry_offset_y = 0.0;

    double time_cap = 60.0;

    /// Throws SimError naming the first violated constraint.
    void validate() const;
    double track_y() const { return hall_depth / 2; }
    Box2 hall() const { return {0.0, hall_width, 0.0, hall_depth}; }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct PendingMode {
    std::int64_t apply_at_us = 0;
    Mode mode = Mode::Normal;
};

struct SimState {
    std::int64_t time_us = 0;
    double robot_pos = 0.0;  // along the track
    double robot_speed = 0.0;
    bool human_present = false;
    double human_x = 0.0, human_y = 0.0;
    Mode mode = Mode::Normal;
    std::vector<PendingMode> pending;

    double time() const { return static_cast<double>(time_us) * 1e-6; }
};

struct TraceRecord {
    std::int64_t time_us = 0;
    Box2 robot;
    std::optional<Box2> human;
    double speed = 0.0;
    Mode mode = Mode::Normal;

    double timestamp() const { return static_cast<double>(time_us) * 1e-6; }
    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct ImpactReport {
    double reaction_delay = 0.0;
    bool collided = false;
    double impact_time = 0.0;
    double robot_speed_at_impact = 0.0;
    bool reached_end = false;
    double final_speed = 0.0;
    double end_time = 0.0;
};

struct SimResult {
    std::vector<TraceRecord> trace;
    ImpactReport report;
};

Mode controller_decide(double distance, const ScenarioConfig& config = {});
double target_speed(Mode mode, double robot_pos, const ScenarioConfig& config = {});

/// One explicit-Euler step of length physics_step. Speed moves toward the
/// target speed without overshooting it; position is clamped to the track;
/// the human (if present) runs straight at the robot's center.
SimState physics_step(const SimState& state, const ScenarioConfig& config);

SimState initial_state(const ScenarioConfig& config);
Box2 robot_box(const SimState& state, const ScenarioConfig& config);
std::optional<Box2> human_box(const SimState& state, const ScenarioConfig& config);

/// Distance the controller compares against the mode thresholds.
double controller_distance(const SimState& state, const Box2& human, const ScenarioConfig& config);

SimResult run_scenario(const ScenarioConfig& config);

/// One run per delay (delays ascending).
std::vector<ImpactReport> worst_case_sweep(const ScenarioConfig& config, const std::vector<double>& delays);

// Trace CSV:
//   timestamp_s,robot_xmin,robot_xmax,robot_ymin,robot_ymax,human_xmin,human_xmax,human_ymin,human_ymax,speed_mps,mode
// Human columns are empty while no human is present.
inline constexpr const char* kTraceHeader =
    "timestamp_s,robot_xmin,robot_xmax,robot_ymin,robot_ymax,human_xmin,human_xmax,human_ymin,human_ymax,speed_mps,mode";

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(const std::string& message, std::size_t row) : std::runtime_error(message), row_(row) {}
    /// 1-based line number in the file.
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

std::vector<TraceRecord> read_trace_csv(std::istream& in);

}  // namespace prtspace
