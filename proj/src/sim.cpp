#include "prtspace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace prtspace {

Box2 Box2::clamped(const Box2& b) const {
    return {std::clamp(xmin, b.xmin, b.xmax), std::clamp(xmax, b.xmin, b.xmax), std::clamp(ymin, b.ymin, b.ymax),
            std::clamp(ymax, b.ymin, b.ymax)};
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Normal: return "normal";
        case Mode::Yellow: return "yellow";
        case Mode::Red: return "red";
    }
    return "normal";
}

std::optional<Mode> parse_mode(std::string_view name) {
    if (name == "normal") return Mode::Normal;
    if (name == "yellow") return Mode::Yellow;
    if (name == "red") return Mode::Red;
    return std::nullopt;
}

namespace {

std::int64_t to_us(double seconds) { return std::llround(seconds * 1e6); }

}  // namespace

void ScenarioConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) throw SimError(std::string(name) + " must be positive");
    };
    positive(hall_width, "hall_width");
    positive(hall_depth, "hall_depth");
    positive(robot_width, "robot_width");
    positive(robot_depth, "robot_depth");
    positive(track_length, "track_length");
    positive(robot_max_speed, "robot_max_speed");
    positive(normal_accel, "normal_accel");
    positive(normal_decel, "normal_decel");
    positive(yellow_decel, "yellow_decel");
    positive(red_decel, "red_decel");
    positive(yellow_speed, "yellow_speed");
    positive(creep_speed, "creep_speed");
    positive(creep_zone, "creep_zone");
    positive(yellow_threshold, "yellow_threshold");
    positive(red_threshold, "red_threshold");
    positive(physics_step, "physics_step");
    positive(poll_period, "poll_period");
    positive(human_speed, "human_speed");
    positive(human_width, "human_width");
    positive(human_depth, "human_depth");
    positive(time_cap, "time_cap");
    if (red_threshold >= yellow_threshold) throw SimError("red_threshold must be below yellow_threshold");
    if (reaction_delay < 0 || !std::isfinite(reaction_delay)) throw SimError("reaction_delay must be non-negative");
    if (poll_phase < 0) throw SimError("poll_phase must be non-negative");
    if (human_entry_time < 0) throw SimError("human_entry_time must be non-negative");
    std::int64_t step = to_us(physics_step), poll = to_us(poll_period);
    if (step <= 0 || poll % step != 0) throw SimError("physics_step must divide poll_period");
    if (to_us(poll_phase) % step != 0) throw SimError("poll_phase must be a multiple of physics_step");
    if (track_origin_x < 0 || track_origin_x + track_length > hall_width)
        throw SimError("track must lie inside the hall");
}

Mode controller_decide(double distance, const ScenarioConfig& config) {
    if (distance <= config.red_threshold) return Mode::Red;
    if (distance < config.yellow_threshold) return Mode::Yellow;
    return Mode::Normal;
}

double target_speed(Mode mode, double robot_pos, const ScenarioConfig& config) {
    const bool creeping = robot_pos > config.track_length - config.creep_zone;
    switch (mode) {
        case Mode::Normal: return creeping ? config.creep_speed : config.robot_max_speed;
        case Mode::Yellow: return creeping ? std::min(config.creep_speed, config.yellow_speed) : config.yellow_speed;
        case Mode::Red: return 0.0;
    }
    return 0.0;
}

SimState initial_state(const ScenarioConfig& config) {
    SimState s;
    s.robot_pos = 0.0;
    s.robot_speed = 0.0;
    s.mode = Mode::Normal;
    (void)config;
    return s;
}

Box2 robot_box(const SimState& state, const ScenarioConfig& config) {
    return Box2::centered(config.track_origin_x + state.robot_pos, config.track_y(), config.robot_width,
                          config.robot_depth)
        .clamped(config.hall());
}

std::optional<Box2> human_box(const SimState& state, const ScenarioConfig& config) {
    if (!state.human_present) return std::nullopt;
    return Box2::centered(state.human_x, state.human_y, config.human_width, config.human_depth).clamped(config.hall());
}

SimState physics_step(const SimState& state, const ScenarioConfig& config) {
    const double dt = config.physics_step;
    SimState next = state;
    next.time_us = state.time_us + to_us(dt);

    const double target = target_speed(state.mode, state.robot_pos, config);
    double speed = state.robot_speed;
    if (speed < target) {
        speed = std::min(target, speed + config.normal_accel * dt);
    } else if (speed > target) {
        double decel = state.mode == Mode::Red      ? config.red_decel
                       : state.mode == Mode::Yellow ? config.yellow_decel
                                                    : config.normal_decel;
        speed = std::max(target, speed - decel * dt);
    }
    speed = std::clamp(speed, -config.robot_max_speed, config.robot_max_speed);

    next.robot_pos = std::clamp(state.robot_pos + state.robot_speed * dt, 0.0, config.track_length);
    next.robot_speed = speed;

    if (state.human_present) {
        double rx = config.track_origin_x + state.robot_pos, ry = config.track_y();
        double dx = rx - state.human_x, dy = ry - state.human_y;
        double dist = std::hypot(dx, dy);
        double stride = config.human_speed * dt;
        if (dist <= stride) {
            next.human_x = rx;
            next.human_y = ry;
        } else {
            next.human_x = state.human_x + dx / dist * stride;
            next.human_y = state.human_y + dy / dist * stride;
        }
    }
    return next;
}

double controller_distance(const SimState& state, const Box2& human, const ScenarioConfig& config) {
    if (!config.edge_distance)
        return std::hypot(config.track_origin_x + state.robot_pos - (human.xmin + human.xmax) / 2,
                          config.track_y() - (human.ymin + human.ymax) / 2);
    Box2 robot = robot_box(state, config);
    double dx = std::max({0.0, human.xmin - robot.xmax, robot.xmin - human.xmax});
    double dy = std::max({0.0, human.ymin - robot.ymax, robot.ymin - human.ymax});
    return std::hypot(dx, dy);
}

SimResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const std::int64_t step_us = to_us(config.physics_step);
    const std::int64_t poll_us = to_us(config.poll_period);
    const std::int64_t phase_us = to_us(config.poll_phase);
    const std::int64_t delay_us = to_us(config.reaction_delay);
    const std::int64_t entry_us = to_us(config.human_entry_time);
    const std::int64_t cap_us = to_us(config.time_cap);

    SimResult result;
    result.report.reaction_delay = config.reaction_delay;
    SimState state = initial_state(config);

    auto place_human = [&] {
        if (!config.human_enabled || state.human_present || state.time_us < entry_us) return;
        state.human_present = true;
        double half_w = config.human_width / 2, half_d = config.human_depth / 2;
        state.human_x = std::clamp(config.track_origin_x + state.robot_pos + config.human_entry_distance, half_w,
                                   config.hall_width - half_w);
        state.human_y = std::clamp(config.track_y() + config.human_entry_offset_y, half_d, config.hall_depth - half_d);
    };
    auto record = [&] {
        result.trace.push_back({state.time_us, robot_box(state, config), human_box(state, config), state.robot_speed,
                                state.mode});
    };

    place_human();
    record();
    while (state.time_us < cap_us) {
        place_human();
        if (state.time_us >= phase_us && (state.time_us - phase_us) % poll_us == 0) {
            double distance = std::numeric_limits<double>::infinity();
            if (auto human = human_box(state, config)) distance = controller_distance(state, *human, config);
            state.pending.push_back({state.time_us + delay_us, controller_decide(distance, config)});
        }
        auto due = std::stable_partition(state.pending.begin(), state.pending.end(),
                                         [&](const PendingMode& p) { return p.apply_at_us <= state.time_us; });
        for (auto it = state.pending.begin(); it != due; ++it) state.mode = it->mode;
        state.pending.erase(state.pending.begin(), due);

        state = physics_step(state, config);
        record();

        auto human = human_box(state, config);
        if (human && robot_box(state, config).touches(*human)) {
            result.report.collided = true;
            result.report.impact_time = state.time();
            result.report.robot_speed_at_impact = state.robot_speed;
            break;
        }
        if (state.robot_pos >= config.track_length && !result.report.reached_end) {
            result.report.reached_end = true;
            result.report.final_speed = state.robot_speed;
            if (!state.human_present && (!config.human_enabled || state.time_us >= entry_us)) break;
            if (!config.human_enabled) break;
        }
    }
    result.report.end_time = state.time();
    (void)step_us;
    return result;
}

std::vector<ImpactReport> worst_case_sweep(const ScenarioConfig& config, const std::vector<double>& delays) {
    if (!std::is_sorted(delays.begin(), delays.end())) throw SimError("sweep delays must be ascending");
    std::vector<ImpactReport> reports;
    for (double d : delays) {
        ScenarioConfig c = config;
        c.reaction_delay = d;
        reports.push_back(run_scenario(c).report);
    }
    return reports;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << kTraceHeader << "\n";
    char ts[40];
    for (const auto& r : trace) {
        std::snprintf(ts, sizeof ts, "%.6f", static_cast<double>(r.time_us) * 1e-6);
        out << ts << "," << fmt(r.robot.xmin) << "," << fmt(r.robot.xmax) << "," << fmt(r.robot.ymin) << ","
            << fmt(r.robot.ymax) << ",";
        if (r.human)
            out << fmt(r.human->xmin) << "," << fmt(r.human->xmax) << "," << fmt(r.human->ymin) << ","
                << fmt(r.human->ymax) << ",";
        else
            out << ",,,,";
        out << fmt(r.speed) << "," << mode_name(r.mode) << "\n";
    }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    std::vector<TraceRecord> trace;
    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kTraceHeader) throw TraceFormatError("line 1: unexpected trace header", row);
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 11)
            throw TraceFormatError("line " + std::to_string(row) + ": expected 11 fields, found " +
                                       std::to_string(fields.size()),
                                   row);
        auto number = [&](size_t i) {
            const std::string& f = fields[i];
            char* end = nullptr;
            double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
                throw TraceFormatError("line " + std::to_string(row) + ": bad number in column " + std::to_string(i + 1),
                                       row);
            return v;
        };
        TraceRecord r;
        r.time_us = to_us(number(0));
        r.robot = {number(1), number(2), number(3), number(4)};
        bool human_empty = fields[5].empty() && fields[6].empty() && fields[7].empty() && fields[8].empty();
        if (!human_empty) r.human = Box2{number(5), number(6), number(7), number(8)};
        r.speed = number(9);
        auto mode = parse_mode(fields[10]);
        if (!mode) throw TraceFormatError("line " + std::to_string(row) + ": unknown mode '" + fields[10] + "'", row);
        r.mode = *mode;
        if (r.robot.xmin > r.robot.xmax || r.robot.ymin > r.robot.ymax ||
            (r.human && (r.human->xmin > r.human->xmax || r.human->ymin > r.human->ymax)))
            throw TraceFormatError("line " + std::to_string(row) + ": inverted box", row);
        if (!trace.empty() && r.time_us <= trace.back().time_us)
            throw TraceFormatError("line " + std::to_string(row) + ": timestamps must increase", row);
        trace.push_back(r);
    }
    return trace;
}

}  // namespace prtspace
