#include "prtspace/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <regex>
#include <sstream>

namespace prtspace {

void SpatioTemporalSpec::validate() const {
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (i > 0 && e.time_us < entries[i - 1].time_us) throw SpatialError("entries must be sorted by time");
        if (!(e.box.xmin < e.box.xmax) || !(e.box.ymin < e.box.ymax))
            throw SpatialError("entry " + std::to_string(i) + " has a degenerate box");
        if (!(e.probability > 0.0) || e.probability > 1.0)
            throw SpatialError("entry " + std::to_string(i) + " probability must lie in (0,1]");
    }
}

SpatioTemporalSpec trace_to_spec(const std::vector<TraceRecord>& trace, Entity entity, double probability) {
    if (!(probability > 0.0) || probability > 1.0) throw SpatialError("probability must lie in (0,1]");
    SpatioTemporalSpec spec;
    spec.entity = entity == Entity::Robot ? "robot" : "human";
    for (const auto& r : trace) {
        if (entity == Entity::Robot) {
            spec.entries.push_back({r.time_us, r.robot, probability});
        } else if (r.human) {
            spec.entries.push_back({r.time_us, *r.human, probability});
        }
    }
    return spec;
}

namespace {

// Cadence as the gcd of successive distinct-time gaps; 0 with fewer than two times.
std::int64_t cadence(const SpatioTemporalSpec& s) {
    std::int64_t g = 0;
    for (size_t i = 1; i < s.entries.size(); ++i) g = std::gcd(g, s.entries[i].time_us - s.entries[i - 1].time_us);
    return g;
}

std::optional<Box2> positive_overlap(const Box2& a, const Box2& b) {
    Box2 o{std::max(a.xmin, b.xmin), std::min(a.xmax, b.xmax), std::max(a.ymin, b.ymin), std::min(a.ymax, b.ymax)};
    if (o.xmin < o.xmax && o.ymin < o.ymax) return o;
    return std::nullopt;
}

}  // namespace

std::vector<CollisionEvent> check_collision(const SpatioTemporalSpec& a, const SpatioTemporalSpec& b) {
    a.validate();
    b.validate();
    std::int64_t ca = cadence(a), cb = cadence(b);
    if (ca > 0 && cb > 0) {
        if (ca != cb)
            throw SpatialError("time bases differ: cadence " + std::to_string(ca) + " us vs " + std::to_string(cb) +
                               " us");
        std::int64_t pa = ((a.entries.front().time_us % ca) + ca) % ca;
        std::int64_t pb = ((b.entries.front().time_us % cb) + cb) % cb;
        if (pa != pb) throw SpatialError("time bases differ: sampling phases do not align");
    }

    std::vector<CollisionEvent> events;
    size_t j = 0;
    for (size_t i = 0; i < a.entries.size();) {
        std::int64_t t = a.entries[i].time_us;
        size_t i_end = i;
        while (i_end < a.entries.size() && a.entries[i_end].time_us == t) ++i_end;
        while (j < b.entries.size() && b.entries[j].time_us < t) ++j;
        size_t j_end = j;
        while (j_end < b.entries.size() && b.entries[j_end].time_us == t) ++j_end;
        for (size_t x = i; x < i_end; ++x)
            for (size_t y = j; y < j_end; ++y) {
                const auto& ea = a.entries[x];
                const auto& eb = b.entries[y];
                if (auto o = positive_overlap(ea.box, eb.box))
                    events.push_back({t, ea.box, eb.box, *o, ea.probability * eb.probability});
            }
        i = i_end;
    }
    return events;
}

std::vector<CollisionEvent> threshold_filter(const std::vector<CollisionEvent>& events, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw SpatialError("threshold must lie in [0,1]");
    std::vector<CollisionEvent> kept;
    std::copy_if(events.begin(), events.end(), std::back_inserter(kept),
                 [&](const CollisionEvent& e) { return e.joint_probability >= epsilon; });
    return kept;
}

std::vector<WidenedSpec> widen_by_speed_error(const SpatioTemporalSpec& spec, const std::vector<SpeedErrorLevel>& levels,
                                              const WidenOptions& options) {
    spec.validate();
    for (size_t i = 0; i < levels.size(); ++i) {
        const auto& l = levels[i];
        if (!(l.cumulative > 0.0 && l.cumulative <= 1.0)) throw SpatialError("levels must lie in (0,1]");
        if (!(l.max_error >= 0.0) || !std::isfinite(l.max_error)) throw SpatialError("speed errors must be non-negative");
        if (i > 0 && (l.cumulative <= levels[i - 1].cumulative || l.max_error < levels[i - 1].max_error))
            throw SpatialError("levels must ascend with non-decreasing errors");
    }
    if (options.horizon && !(*options.horizon >= 0.0)) throw SpatialError("horizon must be non-negative");

    std::vector<WidenedSpec> out;
    if (spec.entries.empty()) {
        for (const auto& l : levels) out.push_back({l.cumulative, spec});
        return out;
    }
    const std::int64_t t0 = spec.entries.front().time_us;
    for (const auto& l : levels) {
        WidenedSpec w{l.cumulative, {spec.entity, {}}};
        for (const auto& e : spec.entries) {
            double dt = static_cast<double>(e.time_us - t0) * 1e-6;
            if (options.horizon && dt > *options.horizon + 1e-12) break;
            Box2 box = e.box;
            box.xmin -= l.max_error * dt;
            box.xmax += l.max_error * dt;
            if (options.bounds) box = box.clamped(*options.bounds);
            w.spec.entries.push_back({e.time_us, box, l.cumulative * e.probability});
        }
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string seconds(std::int64_t us) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld", us < 0 ? "-" : "", static_cast<long long>(std::llabs(us) / 1000000),
                  static_cast<long long>(std::llabs(us) % 1000000));
    return buf;
}

}  // namespace

void export_bespaced(std::ostream& out, const SpatioTemporalSpec& spec) {
    spec.validate();
    for (size_t i = 0; i < spec.entries.size(); ++i) {
        const auto& e = spec.entries[i];
        if (i == 0 || e.time_us != spec.entries[i - 1].time_us) out << "time = " << seconds(e.time_us) << " ->\n";
        out << "  occupied box [" << num(e.box.xmin) << "," << num(e.box.xmax) << "]x[" << num(e.box.ymin) << ","
            << num(e.box.ymax) << "] with probability " << num(e.probability) << "\n";
    }
}

std::string export_bespaced(const SpatioTemporalSpec& spec) {
    std::ostringstream out;
    export_bespaced(out, spec);
    return out.str();
}

SpatioTemporalSpec read_bespaced(std::istream& in) {
    static const std::string number = R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))";
    static const std::regex entity_re(R"(\s*entity\s+(\S+)\s*)");
    static const std::regex time_re(R"(\s*time\s*=\s*)" + number + R"(\s*->\s*)");
    static const std::regex box_re(R"(\s*occupied\s+box\s*\[\s*)" + number + R"(\s*,\s*)" + number +
                                   R"(\s*\]\s*x\s*\[\s*)" + number + R"(\s*,\s*)" + number +
                                   R"(\s*\]\s*with\s+probability\s+)" + number + R"(\s*)");

    SpatioTemporalSpec spec;
    std::optional<std::int64_t> current;
    std::string line;
    std::size_t lineno = 0;
    bool seen_entity = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::smatch m;
        auto fail = [&](const std::string& what) {
            throw BespacedFormatError("line " + std::to_string(lineno) + ": " + what, lineno);
        };
        auto to_double = [&](const std::string& s) {
            double v = std::strtod(s.c_str(), nullptr);
            if (!std::isfinite(v)) fail("number out of range");
            return v;
        };
        if (std::regex_match(line, m, entity_re)) {
            if (seen_entity || current) fail("entity must be declared once, before any block");
            spec.entity = m[1];
            seen_entity = true;
        } else if (std::regex_match(line, m, time_re)) {
            double s = to_double(m[1]);
            auto us = std::llround(s * 1e6);
            if (current && us < *current) fail("time blocks must ascend");
            if (current && us == *current) fail("duplicate time block");
            current = us;
        } else if (std::regex_match(line, m, box_re)) {
            if (!current) fail("occupancy line outside a time block");
            OccupancyEntry e{*current, {to_double(m[1]), to_double(m[2]), to_double(m[3]), to_double(m[4])},
                             to_double(m[5])};
            if (!(e.box.xmin < e.box.xmax) || !(e.box.ymin < e.box.ymax)) fail("degenerate box");
            if (!(e.probability > 0.0) || e.probability > 1.0) fail("probability must lie in (0,1]");
            spec.entries.push_back(e);
        } else {
            fail("expected 'entity', 'time = ... ->' or 'occupied box ...'");
        }
    }
    return spec;
}

SpatioTemporalSpec read_bespaced(const std::string& text) {
    std::istringstream in(text);
    return read_bespaced(in);
}

Probability prob_at_least(const DelayPmf& pmf, Tick threshold) {
    Probability p = 0;
    for (const auto& m : pmf.masses())
        if (m.tick >= threshold) p += m.prob;
    return p;
}

}  // namespace prtspace
