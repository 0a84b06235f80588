// Python bindings. Exact probabilities cross the boundary as fractions.Fraction.

#include "prtspace/checker.hpp"
#include "prtspace/distributions.hpp"
#include "prtspace/sim.hpp"
#include "prtspace/spatial.hpp"
#include "prtspace/textio.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>

namespace py = pybind11;
using namespace prtspace;

namespace {

py::object to_fraction(const Probability& p) {
    static py::object fraction = py::module_::import("fractions").attr("Fraction");
    return fraction(py::int_(py::str(p.get_num().get_str())), py::int_(py::str(p.get_den().get_str())));
}

Probability from_python(const py::handle& h) {
    if (py::isinstance<py::str>(h)) return parse_probability(h.cast<std::string>());
    if (py::isinstance<py::float_>(h)) throw py::type_error("probabilities must be exact: pass a str, int or Fraction");
    py::object f = py::module_::import("fractions").attr("Fraction")(h);
    Probability p(py::str(f.attr("numerator")).cast<std::string>() + "/" +
                  py::str(f.attr("denominator")).cast<std::string>());
    p.canonicalize();
    return p;
}

OptMode opt_mode(const std::string& s) {
    if (s == "max") return OptMode::Max;
    if (s == "min") return OptMode::Min;
    throw py::value_error("mode must be 'max' or 'min'");
}

TimingSemantics semantics_of(const std::string& s) {
    if (s == "deadline") return TimingSemantics::Deadline;
    if (s == "window") return TimingSemantics::Window;
    throw py::value_error("semantics must be 'deadline' or 'window'");
}

Entity entity_of(const std::string& s) {
    if (s == "robot") return Entity::Robot;
    if (s == "human") return Entity::Human;
    throw py::value_error("entity must be 'robot' or 'human'");
}

class ModelSyntaxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parsed model document with composed MDPs cached per timing semantics.
class Model {
public:
    explicit Model(ModelDocument doc) : doc_(std::move(doc)) {}

    static Model parse(const std::string& text, const std::string& file) {
        auto r = parse_model(text);
        if (!r.ok()) {
            std::string msg;
            for (const auto& d : r.diagnostics) msg += (msg.empty() ? "" : "\n") + d.format(file);
            throw ModelSyntaxError(msg);
        }
        return Model(std::move(*r.document));
    }

    const ModelDocument& document() const { return doc_; }

    const DigitalMdp& mdp(const std::optional<std::string>& semantics) {
        if (!doc_.network) throw ModelError("document has no network");
        TimingSemantics s = semantics ? semantics_of(*semantics)
                                      : doc_.network->semantics.value_or(TimingSemantics::Deadline);
        auto it = cache_.find(s);
        if (it == cache_.end()) {
            ComposeOptions opts;
            opts.semantics = s;
            py::gil_scoped_release release;
            it = cache_.emplace(s, compose(build_network(doc_), opts)).first;
        }
        return it->second;
    }

    Expr target(const std::optional<std::string>& text) const {
        if (text) return parse_expr(*text);
        if (doc_.network && doc_.network->target) return *doc_.network->target;
        throw ModelError("no target given and the network declares none");
    }

private:
    ModelDocument doc_;
    std::map<TimingSemantics, DigitalMdp> cache_;
};

CheckOptions check_options(bool exact) {
    CheckOptions o;
    o.horizon_cap = default_horizon_cap();
    o.arithmetic = exact ? Arithmetic::Exact : Arithmetic::Double;
    return o;
}

py::dict result_dict(const ReachabilityResult& r) {
    py::dict d;
    d["probability"] = to_fraction(r.probability);
    d["iterations"] = r.iterations;
    d["states_explored"] = r.states_explored;
    return d;
}

}  // namespace

PYBIND11_MODULE(_prtspace, m) {
    m.doc() = "Probabilistic real-time reachability and spatiotemporal collision checking";

    py::register_exception<ModelSyntaxError>(m, "ModelSyntaxError", PyExc_ValueError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<CheckError>(m, "CheckError", PyExc_RuntimeError);
    py::register_exception<ExprError>(m, "ExprError", PyExc_ValueError);

    m.attr("TICK_SECONDS") = 1e-4;
    m.def("seconds_to_ticks", &seconds_to_ticks, py::arg("seconds"));
    m.def("ticks_to_seconds", &ticks_to_seconds, py::arg("ticks"));

    // distributions
    py::class_<DelayCdf>(m, "DelayCdf")
        .def(py::init([](const std::vector<std::pair<Tick, py::object>>& points) {
                 std::vector<CdfPoint> pts;
                 for (const auto& [t, p] : points) pts.push_back({t, from_python(p)});
                 return DelayCdf(std::move(pts));
             }),
             py::arg("points"))
        .def_property_readonly("points",
                               [](const DelayCdf& c) {
                                   py::list out;
                                   for (const auto& p : c.points()) out.append(py::make_tuple(p.tick, to_fraction(p.cumulative)));
                                   return out;
                               })
        .def_property_readonly("min_tick", &DelayCdf::min_tick)
        .def_property_readonly("max_tick", &DelayCdf::max_tick)
        .def("__eq__", [](const DelayCdf& a, const DelayCdf& b) { return a == b; });

    py::class_<DelayPmf>(m, "DelayPmf")
        .def(py::init([](const std::vector<std::pair<Tick, py::object>>& masses) {
                 std::vector<Mass> ms;
                 for (const auto& [t, p] : masses) ms.push_back({t, from_python(p)});
                 return DelayPmf(std::move(ms));
             }),
             py::arg("masses"))
        .def_static("point_mass", &DelayPmf::point_mass, py::arg("tick"))
        .def_property_readonly("masses",
                               [](const DelayPmf& d) {
                                   py::list out;
                                   for (const auto& x : d.masses()) out.append(py::make_tuple(x.tick, to_fraction(x.prob)));
                                   return out;
                               })
        .def_property_readonly("min_tick", &DelayPmf::min_tick)
        .def_property_readonly("max_tick", &DelayPmf::max_tick)
        .def("__eq__", [](const DelayPmf& a, const DelayPmf& b) { return a == b; });

    m.def("cdf_to_pmf", &cdf_to_pmf, py::arg("cdf"));
    m.def("pmf_to_cdf", &pmf_to_cdf, py::arg("pmf"));
    m.def("convolve", &convolve, py::arg("a"), py::arg("b"));
    m.def("convolve_all", [](const std::vector<DelayPmf>& pmfs) { return convolve_all(pmfs); }, py::arg("pmfs"));
    m.def("prob_at_most", [](const DelayPmf& d, Tick t) { return to_fraction(prob_at_most(d, t)); }, py::arg("pmf"),
          py::arg("tick"));
    m.def("prob_at_least", [](const DelayPmf& d, Tick t) { return to_fraction(prob_at_least(d, t)); }, py::arg("pmf"),
          py::arg("tick"));

    auto t1 = m.def_submodule("table1", "Measured delay distributions of the robot case study");
    t1.def("sensor_fetch", &table1::sensor_fetch);
    t1.def("recognition", &table1::recognition);
    t1.def("communication", &table1::communication);
    t1.def("robot_processing", &table1::robot_processing);

    // models and checking
    py::class_<Model>(m, "Model")
        .def_static("parse", &Model::parse, py::arg("text"), py::arg("file") = "<string>")
        .def_property_readonly("queries",
                               [](const Model& mo) {
                                   std::vector<std::string> names;
                                   for (const auto& q : mo.document().queries) names.push_back(q.name);
                                   return names;
                               })
        .def_property_readonly("distributions",
                               [](const Model& mo) {
                                   py::dict d;
                                   for (const auto& x : mo.document().distributions) d[py::str(x.name)] = x.cdf;
                                   return d;
                               })
        .def("to_text", [](const Model& mo) { return print_model(mo.document()); })
        .def("export_prism", [](const Model& mo) { return export_prism(build_network(mo.document())); })
        .def(
            "state_count", [](Model& mo, std::optional<std::string> sem) { return mo.mdp(sem).state_count(); },
            py::arg("semantics") = py::none())
        .def(
            "check",
            [](Model& mo, Tick bound, std::optional<std::string> target, const std::string& mode,
               std::optional<std::string> semantics, bool exact) {
                const auto& mdp = mo.mdp(semantics);
                ReachabilityQuery q{mo.target(target), bound, opt_mode(mode)};
                ReachabilityResult r;
                {
                    py::gil_scoped_release release;
                    r = check_bounded_reachability(mdp, q, check_options(exact));
                }
                return result_dict(r);
            },
            py::arg("bound"), py::arg("target") = py::none(), py::arg("mode") = "max",
            py::arg("semantics") = py::none(), py::arg("exact") = true)
        .def(
            "check_query",
            [](Model& mo, const std::string& name) {
                const auto* q = mo.document().find_query(name);
                if (!q) throw py::key_error("no query named '" + name + "'");
                auto target = mo.document().query_target(*q);
                if (!target) throw ModelError("query '" + name + "' has no target");
                const auto& mdp = mo.mdp(std::nullopt);
                py::dict d;
                d["bound"] = q->bound;
                for (OptMode mode : {OptMode::Max, OptMode::Min}) {
                    bool wanted = q->mode == QueryMode::Both || (q->mode == QueryMode::Max) == (mode == OptMode::Max);
                    if (!wanted) continue;
                    ReachabilityResult r;
                    {
                        py::gil_scoped_release release;
                        r = check_bounded_reachability(mdp, {*target, q->bound, mode}, check_options(true));
                    }
                    d[mode == OptMode::Max ? "max" : "min"] = to_fraction(r.probability);
                }
                d["reference"] = q->reference ? to_fraction(*q->reference) : py::none();
                return d;
            },
            py::arg("name"))
        .def(
            "density",
            [](Model& mo, const std::vector<Tick>& grid, std::optional<std::string> target, const std::string& mode) {
                const auto& mdp = mo.mdp(std::nullopt);
                auto t = mo.target(target);
                DensityResult r;
                {
                    py::gil_scoped_release release;
                    r = density_sweep(mdp, t, grid, opt_mode(mode), check_options(true));
                }
                py::list out;
                for (const auto& p : r.points)
                    out.append(py::make_tuple(p.bound, to_fraction(p.cumulative), to_fraction(p.density)));
                return out;
            },
            py::arg("grid"), py::arg("target") = py::none(), py::arg("mode") = "max")
        .def(
            "profile",
            [](Model& mo, Tick max_bound, std::optional<std::string> target, const std::string& mode) {
                const auto& mdp = mo.mdp(std::nullopt);
                auto t = mo.target(target);
                std::vector<Probability> values;
                {
                    py::gil_scoped_release release;
                    values = reachability_profile(mdp, t, max_bound, opt_mode(mode), check_options(true));
                }
                py::list out;
                for (const auto& v : values) out.append(to_fraction(v));
                return out;
            },
            py::arg("max_bound"), py::arg("target") = py::none(), py::arg("mode") = "max");

    // simulation
    py::class_<Box2>(m, "Box2")
        .def(py::init<double, double, double, double>(), py::arg("xmin"), py::arg("xmax"), py::arg("ymin"),
             py::arg("ymax"))
        .def_readwrite("xmin", &Box2::xmin)
        .def_readwrite("xmax", &Box2::xmax)
        .def_readwrite("ymin", &Box2::ymin)
        .def_readwrite("ymax", &Box2::ymax)
        .def("area", &Box2::area)
        .def("__eq__", [](const Box2& a, const Box2& b) { return a == b; })
        .def("__repr__", [](const Box2& b) {
            return "Box2(" + std::to_string(b.xmin) + ", " + std::to_string(b.xmax) + ", " + std::to_string(b.ymin) +
                   ", " + std::to_string(b.ymax) + ")";
        });

    py::class_<ScenarioConfig> cfg(m, "ScenarioConfig");
    cfg.def(py::init<>()).def("validate", &ScenarioConfig::validate);
#define PRTSPACE_FIELD(name) cfg.def_readwrite(#name, &ScenarioConfig::name)
    PRTSPACE_FIELD(hall_width);
    PRTSPACE_FIELD(hall_depth);
    PRTSPACE_FIELD(robot_width);
    PRTSPACE_FIELD(robot_depth);
    PRTSPACE_FIELD(track_length);
    PRTSPACE_FIELD(robot_max_speed);
    PRTSPACE_FIELD(normal_accel);
    PRTSPACE_FIELD(normal_decel);
    PRTSPACE_FIELD(yellow_decel);
    PRTSPACE_FIELD(red_decel);
    PRTSPACE_FIELD(yellow_speed);
    PRTSPACE_FIELD(creep_speed);
    PRTSPACE_FIELD(creep_zone);
    PRTSPACE_FIELD(yellow_threshold);
    PRTSPACE_FIELD(red_threshold);
    PRTSPACE_FIELD(physics_step);
    PRTSPACE_FIELD(poll_period);
    PRTSPACE_FIELD(poll_phase);
    PRTSPACE_FIELD(reaction_delay);
    PRTSPACE_FIELD(edge_distance);
    PRTSPACE_FIELD(human_enabled);
    PRTSPACE_FIELD(human_speed);
    PRTSPACE_FIELD(human_entry_time);
    PRTSPACE_FIELD(human_entry_distance);
    PRTSPACE_FIELD(time_cap);
#undef PRTSPACE_FIELD

    py::class_<TraceRecord>(m, "TraceRecord")
        .def_readonly("time_us", &TraceRecord::time_us)
        .def_readonly("robot", &TraceRecord::robot)
        .def_readonly("human", &TraceRecord::human)
        .def_readonly("speed", &TraceRecord::speed)
        .def_property_readonly("mode", [](const TraceRecord& r) { return std::string(mode_name(r.mode)); });

    py::class_<ImpactReport>(m, "ImpactReport")
        .def_readonly("reaction_delay", &ImpactReport::reaction_delay)
        .def_readonly("collided", &ImpactReport::collided)
        .def_readonly("impact_time", &ImpactReport::impact_time)
        .def_readonly("robot_speed_at_impact", &ImpactReport::robot_speed_at_impact)
        .def_readonly("reached_end", &ImpactReport::reached_end)
        .def_readonly("final_speed", &ImpactReport::final_speed)
        .def_readonly("end_time", &ImpactReport::end_time);

    m.def(
        "run_scenario",
        [](const ScenarioConfig& c) {
            auto r = run_scenario(c);
            return py::make_tuple(r.trace, r.report);
        },
        py::arg("config") = ScenarioConfig{});
    m.def("worst_case_sweep", &worst_case_sweep, py::arg("config"), py::arg("delays"));

    // spatial
    py::class_<OccupancyEntry>(m, "OccupancyEntry")
        .def(py::init<std::int64_t, Box2, double>(), py::arg("time_us"), py::arg("box"), py::arg("probability") = 1.0)
        .def_readwrite("time_us", &OccupancyEntry::time_us)
        .def_readwrite("box", &OccupancyEntry::box)
        .def_readwrite("probability", &OccupancyEntry::probability);

    py::class_<SpatioTemporalSpec>(m, "SpatioTemporalSpec")
        .def(py::init<std::string, std::vector<OccupancyEntry>>(), py::arg("entity"), py::arg("entries"))
        .def_readwrite("entity", &SpatioTemporalSpec::entity)
        .def_readwrite("entries", &SpatioTemporalSpec::entries)
        .def("__eq__", [](const SpatioTemporalSpec& a, const SpatioTemporalSpec& b) { return a == b; });

    py::class_<CollisionEvent>(m, "CollisionEvent")
        .def_readonly("time_us", &CollisionEvent::time_us)
        .def_readonly("a", &CollisionEvent::a)
        .def_readonly("b", &CollisionEvent::b)
        .def_readonly("overlap", &CollisionEvent::overlap)
        .def_readonly("joint_probability", &CollisionEvent::joint_probability);

    m.def(
        "trace_to_spec",
        [](const std::vector<TraceRecord>& trace, const std::string& entity, double p) {
            return trace_to_spec(trace, entity_of(entity), p);
        },
        py::arg("trace"), py::arg("entity"), py::arg("probability") = 1.0);
    m.def("check_collision", &check_collision, py::arg("a"), py::arg("b"));
    m.def("threshold_filter", &threshold_filter, py::arg("events"), py::arg("epsilon"));
    m.def("export_bespaced", py::overload_cast<const SpatioTemporalSpec&>(&export_bespaced), py::arg("spec"));
    m.def("read_bespaced", py::overload_cast<const std::string&>(&read_bespaced), py::arg("text"));
}
