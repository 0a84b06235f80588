#include "prtspace/model.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace prtspace {

// ---------------------------------------------------------------------------
// PRTESM validation

std::vector<ModelDiagnostic> validate_prtesm(const Prtesm& machine) {
    using Code = ModelDiagnostic::Code;
    std::vector<ModelDiagnostic> out;
    auto report = [&](Code code, std::string message, std::optional<size_t> state, std::optional<size_t> transition) {
        out.push_back({code, Severity::Error, std::move(message), state, transition});
    };

    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < machine.states.size(); ++i) {
        if (!index.emplace(machine.states[i], i).second)
            report(Code::DuplicateState, "state '" + machine.states[i] + "' declared twice", i, std::nullopt);
    }
    auto initial = index.find(std::string(Prtesm::kInitial));
    if (initial == index.end())
        report(Code::MissingInitial, "machine '" + machine.name + "' has no state named 'initial'", std::nullopt,
               std::nullopt);

    std::set<std::string> clocks(machine.clocks.begin(), machine.clocks.end());
    std::vector<std::vector<size_t>> successors(machine.states.size());
    for (size_t t = 0; t < machine.transitions.size(); ++t) {
        const auto& tr = machine.transitions[t];
        auto src = index.find(tr.source);
        auto dst = index.find(tr.target);
        if (src == index.end()) report(Code::UnknownState, "unknown source state '" + tr.source + "'", std::nullopt, t);
        if (dst == index.end()) report(Code::UnknownState, "unknown target state '" + tr.target + "'", std::nullopt, t);
        if (src != index.end() && dst != index.end()) successors[src->second].push_back(dst->second);
        for (const auto& c : tr.resets)
            if (!clocks.count(c)) report(Code::UndeclaredClock, "reset of undeclared clock '" + c + "'", std::nullopt, t);
        if (tr.guard) {
            if (!clocks.count(tr.guard->clock))
                report(Code::UndeclaredClock, "guard on undeclared clock '" + tr.guard->clock + "'", std::nullopt, t);
            if (tr.guard->lower && tr.guard->upper && *tr.guard->lower > *tr.guard->upper)
                report(Code::BadGuard, "empty clock interval on '" + tr.guard->clock + "'", std::nullopt, t);
            if ((tr.guard->lower && *tr.guard->lower < 0) || (tr.guard->upper && *tr.guard->upper < 0))
                report(Code::BadGuard, "negative clock bound on '" + tr.guard->clock + "'", std::nullopt, t);
        }
    }

    if (initial != index.end()) {
        std::vector<bool> seen(machine.states.size(), false);
        std::vector<size_t> stack{initial->second};
        seen[initial->second] = true;
        while (!stack.empty()) {
            size_t s = stack.back();
            stack.pop_back();
            for (size_t n : successors[s])
                if (!seen[n]) {
                    seen[n] = true;
                    stack.push_back(n);
                }
        }
        for (size_t i = 0; i < machine.states.size(); ++i) {
            // Duplicates are already reported; only judge the first declaration.
            if (!seen[i] && index[machine.states[i]] == i)
                report(Code::UnreachableState, "state '" + machine.states[i] + "' is unreachable from 'initial'", i,
                       std::nullopt);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// PTA helpers

std::vector<std::string> PtaModule::alphabet() const {
    std::set<std::string> labels;
    for (const auto& c : commands)
        if (!c.label.empty()) labels.insert(c.label);
    return {labels.begin(), labels.end()};
}

std::string sanitize_identifier(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), '_');
    return out;
}

void validate_network(const PtaNetwork& network) {
    std::set<std::string> variables, module_names, constants;
    auto claim_variable = [&](const std::string& name, const std::string& module) {
        if (name.empty()) throw ModelError("module '" + module + "' declares an unnamed variable");
        if (!variables.insert(name).second) throw ModelError("variable '" + name + "' declared more than once");
    };
    std::map<std::string, Tick> tick_values;
    for (const auto& c : network.tick_constants) {
        if (!constants.insert(c.name).second) throw ModelError("constant '" + c.name + "' declared more than once");
        tick_values[c.name] = c.value;
    }
    for (const auto& c : network.prob_constants) {
        if (!constants.insert(c.name).second) throw ModelError("constant '" + c.name + "' declared more than once");
        if (!is_unit_interval(c.value)) throw ModelError("probability constant '" + c.name + "' outside [0,1]");
    }
    std::set<std::string> alphabet(network.sync_alphabet.begin(), network.sync_alphabet.end());

    for (const auto& m : network.modules) {
        if (!module_names.insert(m.name).second) throw ModelError("module '" + m.name + "' declared more than once");
        if (m.max_location < 0) throw ModelError("module '" + m.name + "' has an empty location range");
        claim_variable(m.location_var, m.name);
        for (const auto& c : m.clocks) claim_variable(c, m.name);
        for (const auto& f : m.flags) claim_variable(f, m.name);
        std::set<std::string> clocks(m.clocks.begin(), m.clocks.end());
        std::set<std::string> flags(m.flags.begin(), m.flags.end());
        auto in_range = [&](int loc) { return loc >= 0 && loc <= m.max_location; };

        for (size_t ci = 0; ci < m.commands.size(); ++ci) {
            const auto& cmd = m.commands[ci];
            std::string where = "module '" + m.name + "' command " + std::to_string(ci + 1);
            if (!cmd.label.empty() && !alphabet.count(cmd.label))
                throw ModelError(where + ": label '" + cmd.label + "' missing from the synchronization alphabet");
            if (!in_range(cmd.location)) throw ModelError(where + ": guard location out of range");
            for (const auto& g : cmd.clock_guard) {
                if (!clocks.count(g.clock)) throw ModelError(where + ": guard on unknown clock '" + g.clock + "'");
                if (g.value < 0) throw ModelError(where + ": negative clock bound");
                if (!g.constant.empty()) {
                    auto it = tick_values.find(g.constant);
                    if (it == tick_values.end())
                        throw ModelError(where + ": undeclared constant '" + g.constant + "'");
                    if (it->second != g.value)
                        throw ModelError(where + ": constant '" + g.constant + "' does not match its bound");
                }
            }
            if (cmd.branches.empty()) throw ModelError(where + ": no branches");
            Probability total = 0;
            for (const auto& b : cmd.branches) {
                if (b.prob <= 0 || b.prob > 1) throw ModelError(where + ": branch probability outside (0,1]");
                total += b.prob;
                if (!in_range(b.update.location)) throw ModelError(where + ": target location out of range");
                for (const auto& r : b.update.resets)
                    if (!clocks.count(r)) throw ModelError(where + ": reset of unknown clock '" + r + "'");
                for (const auto& [f, v] : b.update.flags)
                    if (!flags.count(f)) throw ModelError(where + ": assignment to unknown flag '" + f + "'");
            }
            if (total != 1)
                throw ModelError(where + ": branch probabilities sum to " + to_exact_string(total) + ", expected 1");
        }
    }
}

// ---------------------------------------------------------------------------
// PRTESM -> PTA

namespace {

std::string join_messages(const std::vector<ModelDiagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        if (!out.empty()) out += "; ";
        out += d.message;
    }
    return out;
}

}  // namespace

TransformResult prtesm_to_pta(const Prtesm& machine, std::span<const CommBinding> bindings,
                              const TransformOptions& options) {
    if (auto diags = validate_prtesm(machine); !diags.empty())
        throw ModelError("machine '" + machine.name + "' is invalid: " + join_messages(diags));
    if (bindings.empty()) throw ModelError("machine '" + machine.name + "': no communication actions selected");

    const std::string tag = options.tag.empty() ? sanitize_identifier(machine.name) : sanitize_identifier(options.tag);
    const std::string initial(Prtesm::kInitial);

    std::map<std::string, size_t> binding_of;
    for (size_t b = 0; b < bindings.size(); ++b) {
        if (!binding_of.emplace(bindings[b].pin, b).second)
            throw ModelError("communication action '" + bindings[b].pin + "' selected twice");
        bool triggers = std::any_of(machine.transitions.begin(), machine.transitions.end(), [&](const auto& t) {
            return t.trigger && t.trigger->pin == bindings[b].pin;
        });
        if (!triggers)
            throw ModelError("communication action '" + bindings[b].pin + "' is not a trigger of machine '" +
                             machine.name + "'");
    }

    auto is_comm = [&](const PrtesmTransition& t) { return t.trigger && binding_of.count(t.trigger->pin); };
    auto is_setup = [&](const PrtesmTransition& t) {
        return !is_comm(t) && t.source != t.target && t.target != initial;
    };

    // Initialization region: states on a setup path from `initial` to the
    // source of some communication transition.
    std::set<std::string> forward{initial};
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& t : machine.transitions)
            if (is_setup(t) && forward.count(t.source) && forward.insert(t.target).second) grew = true;
    }
    std::set<std::string> backward;
    for (const auto& t : machine.transitions)
        if (is_comm(t)) {
            if (!forward.count(t.source))
                throw ModelError("communication action '" + t.trigger->pin + "' in machine '" + machine.name +
                                 "' is not reachable through initialization transitions");
            backward.insert(t.source);
        }
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& t : machine.transitions)
            if (is_setup(t) && backward.count(t.target) && backward.insert(t.source).second) grew = true;
    }

    std::map<std::string, int> location_of{{initial, 0}};
    int next_location = 1;
    for (const auto& s : machine.states)
        if (s != initial && forward.count(s) && backward.count(s)) location_of[s] = next_location++;
    auto kept = [&](const std::string& s) { return location_of.count(s) > 0; };

    TransformResult result;
    PtaModule& module = result.module;
    module.name = tag + "_" + sanitize_identifier(machine.name) + "_prtesm";
    module.location_var = "s_" + tag;
    const std::string clock = "c_" + tag;
    const std::string flag = "flag_" + tag;
    module.clocks.push_back(clock);
    module.flags.push_back(flag);
    auto machine_clock = [&](const std::string& c) { return "clk_" + sanitize_identifier(c) + "_" + tag; };

    // Distinct distributions get their own constant families.
    std::vector<const DelayCdf*> distinct;
    auto distribution_index = [&](const DelayCdf& cdf) {
        for (size_t i = 0; i < distinct.size(); ++i)
            if (*distinct[i] == cdf) return i;
        distinct.push_back(&cdf);
        return distinct.size() - 1;
    };
    auto constant_prefix = [&](size_t dist) {
        return dist == 0 ? tag + "_" : tag + "_d" + std::to_string(dist + 1) + "_";
    };

    struct Group {
        size_t dist;
        std::string completion;
        DelayPmf pmf;
        int pending = 0;
        int first_branch = 0;
    };
    std::vector<Group> groups;
    std::vector<size_t> group_of_binding(bindings.size());
    for (size_t b = 0; b < bindings.size(); ++b) {
        size_t dist = distribution_index(bindings[b].distribution);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.dist == dist && g.completion == bindings[b].completion_label;
        });
        if (it == groups.end()) {
            groups.push_back({dist, bindings[b].completion_label, cdf_to_pmf(bindings[b].distribution)});
            it = groups.end() - 1;
        }
        group_of_binding[b] = static_cast<size_t>(it - groups.begin());
    }
    for (auto& g : groups) {
        g.pending = next_location++;
        g.first_branch = next_location;
        if (g.pmf.masses().size() > 1) next_location += static_cast<int>(g.pmf.masses().size());
    }
    const int terminal = next_location;
    module.max_location = terminal;

    for (size_t d = 0; d < distinct.size(); ++d) {
        DelayPmf pmf = cdf_to_pmf(*distinct[d]);
        DelayCdf canonical = pmf_to_cdf(pmf);
        for (size_t i = 0; i < canonical.points().size(); ++i) {
            const auto& p = canonical.points()[i];
            result.tick_constants.push_back({constant_prefix(d) + std::to_string(i + 1), p.tick});
            result.prob_constants.push_back({constant_prefix(d) + "r" + std::to_string(i + 1), p.cumulative});
        }
    }

    // Initialization commands.
    std::set<std::string> used_machine_clocks;
    for (const auto& t : machine.transitions) {
        if (!is_setup(t) || !kept(t.source) || !kept(t.target)) continue;
        PtaCommand cmd;
        cmd.label = t.source == initial ? options.init_label : "";
        cmd.location = location_of[t.source];
        if (t.guard) {
            used_machine_clocks.insert(t.guard->clock);
            if (t.guard->lower) cmd.clock_guard.push_back({machine_clock(t.guard->clock), ClockRel::Ge, *t.guard->lower, {}});
            if (t.guard->upper) cmd.clock_guard.push_back({machine_clock(t.guard->clock), ClockRel::Le, *t.guard->upper, {}});
        }
        PtaUpdate update{location_of[t.target], {}, {}};
        for (const auto& r : t.resets) {
            used_machine_clocks.insert(r);
            update.resets.push_back(machine_clock(r));
        }
        cmd.branches.push_back({Probability(1), std::move(update)});
        module.commands.push_back(std::move(cmd));
    }
    for (const auto& c : machine.clocks)
        if (used_machine_clocks.count(c)) module.clocks.push_back(machine_clock(c));

    // Arming commands: the communication starts and the module clock restarts.
    for (const auto& t : machine.transitions) {
        if (!is_comm(t)) continue;
        size_t b = binding_of[t.trigger->pin];
        const Group& g = groups[group_of_binding[b]];
        PtaCommand cmd;
        cmd.label = bindings[b].trigger_label.empty() ? sanitize_identifier(bindings[b].pin) : bindings[b].trigger_label;
        cmd.location = location_of[t.source];
        cmd.branches.push_back({Probability(1), {g.pending, {clock}, {}}});
        module.commands.push_back(std::move(cmd));
    }

    // Delay resolution: probabilistic choice of the completion tick, then a
    // completion command guarded by the clock window ending at that tick.
    for (const auto& g : groups) {
        const auto& masses = g.pmf.masses();
        const std::string prefix = constant_prefix(g.dist);
        auto window = [&](size_t i) {
            std::vector<ClockConstraint> guard;
            if (i > 0) guard.push_back({clock, ClockRel::Ge, masses[i - 1].tick, prefix + std::to_string(i)});
            guard.push_back({clock, ClockRel::Le, masses[i].tick, prefix + std::to_string(i + 1)});
            return guard;
        };
        if (masses.size() == 1) {
            module.commands.push_back({g.completion, g.pending, window(0), {{Probability(1), {terminal, {}, {}}}}});
            continue;
        }
        PtaCommand choose;
        choose.location = g.pending;
        for (size_t i = 0; i < masses.size(); ++i)
            choose.branches.push_back({masses[i].prob, {g.first_branch + static_cast<int>(i), {}, {}}});
        module.commands.push_back(std::move(choose));
        for (size_t i = 0; i < masses.size(); ++i)
            module.commands.push_back({g.completion, g.first_branch + static_cast<int>(i), window(i),
                                       {{Probability(1), {terminal, {}, {}}}}});
    }

    module.commands.push_back({"", terminal, {}, {{Probability(1), {terminal, {}, {{flag, true}}}}}});
    return result;
}

TransformResult prtesm_to_pta(const Prtesm& machine, const std::vector<std::string>& comm_actions,
                              const std::map<std::string, DelayCdf>& distributions, const TransformOptions& options) {
    std::vector<CommBinding> bindings;
    for (const auto& pin : comm_actions) {
        auto it = distributions.find(pin);
        if (it == distributions.end()) throw ModelError("no distribution for communication action '" + pin + "'");
        bindings.push_back({pin, it->second, sanitize_identifier(pin), ""});
    }
    return prtesm_to_pta(machine, bindings, options);
}

PtaNetwork assemble_network(std::vector<TransformResult> parts) {
    PtaNetwork network;
    std::set<std::string> labels;
    auto add_unique = [](auto& into, auto&& item) {
        for (const auto& existing : into) {
            if (existing.name != item.name) continue;
            if (existing == item) return;
            throw ModelError("conflicting definitions of constant '" + item.name + "'");
        }
        into.push_back(std::move(item));
    };
    for (auto& part : parts) {
        for (auto& c : part.tick_constants) add_unique(network.tick_constants, std::move(c));
        for (auto& c : part.prob_constants) add_unique(network.prob_constants, std::move(c));
        for (auto& l : part.module.alphabet()) labels.insert(l);
        network.modules.push_back(std::move(part.module));
    }
    network.sync_alphabet.assign(labels.begin(), labels.end());
    validate_network(network);
    return network;
}

// ---------------------------------------------------------------------------
// Digital clocks

size_t DigitalMdp::transition_count() const {
    size_t n = 0;
    for (const auto& acts : actions)
        for (const auto& a : acts) n += a.branches.size();
    return n;
}

std::string DigitalMdp::dump() const {
    std::ostringstream out;
    out << "states " << state_count() << " initial " << initial << "\n";
    for (StateId s = 0; s < state_count(); ++s) {
        out << s << ":";
        auto v = valuation(s);
        for (size_t i = 0; i < variables.size(); ++i) out << " " << variables[i] << "=" << v[i];
        out << "\n";
        for (const auto& a : actions[s]) {
            out << "  [" << (a.tick ? "tick" : a.label) << "]";
            for (size_t b = 0; b < a.branches.size(); ++b)
                out << (b ? " +" : "") << " " << to_exact_string(a.branches[b].prob) << ":" << a.branches[b].target;
            out << "\n";
        }
    }
    return out.str();
}

namespace {

// Zero-duration cycle detection over non-tick actions.
void reject_zero_time_cycles(const DigitalMdp& mdp) {
    enum : std::uint8_t { White, Grey, Black };
    std::vector<std::uint8_t> color(mdp.state_count(), White);
    struct Frame {
        StateId state;
        size_t action = 0, branch = 0;
    };
    for (StateId root = 0; root < mdp.state_count(); ++root) {
        if (color[root] != White) continue;
        std::vector<Frame> stack{{root}};
        color[root] = Grey;
        while (!stack.empty()) {
            Frame& f = stack.back();
            const auto& acts = mdp.actions[f.state];
            bool descended = false;
            while (f.action < acts.size()) {
                const auto& a = acts[f.action];
                if (a.tick || f.branch >= a.branches.size()) {
                    ++f.action;
                    f.branch = 0;
                    continue;
                }
                StateId next = a.branches[f.branch++].target;
                if (color[next] == Grey)
                    throw ModelError("zero-duration cycle through state " + std::to_string(next));
                if (color[next] == White) {
                    color[next] = Grey;
                    stack.push_back({next});
                    descended = true;
                    break;
                }
            }
            if (!descended) {
                color[stack.back().state] = Black;
                stack.pop_back();
            }
        }
    }
}

struct ValuationHash {
    size_t operator()(const std::vector<std::int32_t>& v) const noexcept {
        size_t h = 1469598103934665603ull;
        for (auto x : v) {
            h ^= static_cast<size_t>(static_cast<std::uint32_t>(x));
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace

void validate_mdp(const DigitalMdp& mdp) {
    if (mdp.state_count() == 0) throw ModelError("MDP has no states");
    if (mdp.initial >= mdp.state_count()) throw ModelError("initial state out of range");
    if (mdp.valuations.size() != mdp.state_count() * mdp.variables.size())
        throw ModelError("valuation table does not match the state count");
    for (StateId s = 0; s < mdp.state_count(); ++s) {
        for (const auto& a : mdp.actions[s]) {
            if (a.branches.empty()) throw ModelError("state " + std::to_string(s) + " has an action without branches");
            Probability total = 0;
            for (const auto& b : a.branches) {
                if (b.target >= mdp.state_count()) throw ModelError("successor out of range");
                if (b.prob <= 0 || b.prob > 1) throw ModelError("branch probability outside (0,1]");
                total += b.prob;
            }
            if (total != 1)
                throw ModelError("action at state " + std::to_string(s) + " sums to " + to_exact_string(total));
        }
    }
    reject_zero_time_cycles(mdp);
}

std::map<std::string, Tick> saturate_clock_bound(const PtaNetwork& network) {
    std::map<std::string, Tick> bounds;
    for (const auto& m : network.modules) {
        for (const auto& c : m.clocks) bounds.emplace(c, 0);
        for (const auto& cmd : m.commands)
            for (const auto& g : cmd.clock_guard) bounds[g.clock] = std::max(bounds[g.clock], g.value);
    }
    for (auto& [clock, bound] : bounds) bound += 1;
    return bounds;
}

DigitalMdp compose(const PtaNetwork& network, const ComposeOptions& options) {
    validate_network(network);
    const bool deadline = options.semantics == TimingSemantics::Deadline;
    const auto bounds = saturate_clock_bound(network);

    DigitalMdp mdp;
    const size_t n_modules = network.modules.size();
    std::vector<size_t> clock_base(n_modules), flag_base(n_modules);
    for (const auto& m : network.modules) mdp.variables.push_back(m.location_var);
    for (size_t i = 0; i < n_modules; ++i) {
        clock_base[i] = mdp.variables.size();
        for (const auto& c : network.modules[i].clocks) mdp.variables.push_back(c);
    }
    for (size_t i = 0; i < n_modules; ++i) {
        flag_base[i] = mdp.variables.size();
        for (const auto& f : network.modules[i].flags) mdp.variables.push_back(f);
    }
    const size_t width = mdp.variables.size();

    // Compiled commands.
    struct Window {
        size_t slot;
        std::int64_t lower = 0;
        std::optional<std::int64_t> upper;
    };
    struct Effect {
        Probability prob;
        int location;
        std::vector<size_t> resets;
        std::vector<std::pair<size_t, std::int32_t>> flags;
    };
    struct Command {
        std::string label;
        int location;
        std::vector<Window> windows;
        std::vector<Effect> effects;
    };
    std::vector<std::vector<Command>> commands(n_modules);
    std::vector<std::int32_t> clock_bound(width, 0);
    // active[m][loc][k]: clock k of module m may still be read before a reset.
    std::vector<std::vector<std::vector<bool>>> active(n_modules);

    for (size_t mi = 0; mi < n_modules; ++mi) {
        const auto& m = network.modules[mi];
        auto clock_slot = [&](const std::string& c) {
            return clock_base[mi] + static_cast<size_t>(std::find(m.clocks.begin(), m.clocks.end(), c) - m.clocks.begin());
        };
        auto flag_slot = [&](const std::string& f) {
            return flag_base[mi] + static_cast<size_t>(std::find(m.flags.begin(), m.flags.end(), f) - m.flags.begin());
        };
        for (const auto& c : m.clocks) clock_bound[clock_slot(c)] = static_cast<std::int32_t>(bounds.at(c));
        for (const auto& cmd : m.commands) {
            Command cc{cmd.label, cmd.location, {}, {}};
            for (const auto& g : cmd.clock_guard) {
                size_t slot = clock_slot(g.clock);
                auto it = std::find_if(cc.windows.begin(), cc.windows.end(), [&](const Window& w) { return w.slot == slot; });
                if (it == cc.windows.end()) {
                    cc.windows.push_back(Window{slot, 0, std::nullopt});
                    it = cc.windows.end() - 1;
                }
                if (g.rel == ClockRel::Ge) it->lower = std::max<std::int64_t>(it->lower, g.value);
                else it->upper = it->upper ? std::min<std::int64_t>(*it->upper, g.value) : g.value;
            }
            for (const auto& b : cmd.branches) {
                Effect e{b.prob, b.update.location, {}, {}};
                for (const auto& r : b.update.resets) e.resets.push_back(clock_slot(r));
                for (const auto& [f, v] : b.update.flags) e.flags.push_back({flag_slot(f), v ? 1 : 0});
                cc.effects.push_back(std::move(e));
            }
            commands[mi].push_back(std::move(cc));
        }

        const size_t n_clocks = m.clocks.size();
        auto& act = active[mi];
        act.assign(static_cast<size_t>(m.max_location) + 1, std::vector<bool>(n_clocks, !options.reduce_inactive_clocks));
        if (options.reduce_inactive_clocks) {
            for (const auto& cc : commands[mi])
                for (const auto& w : cc.windows) act[static_cast<size_t>(cc.location)][w.slot - clock_base[mi]] = true;
            for (bool changed = true; changed;) {
                changed = false;
                for (const auto& cc : commands[mi])
                    for (const auto& e : cc.effects)
                        for (size_t k = 0; k < n_clocks; ++k) {
                            if (!act[static_cast<size_t>(e.location)][k]) continue;
                            bool reset = std::find(e.resets.begin(), e.resets.end(), clock_base[mi] + k) != e.resets.end();
                            if (!reset && !act[static_cast<size_t>(cc.location)][k]) {
                                act[static_cast<size_t>(cc.location)][k] = true;
                                changed = true;
                            }
                        }
            }
        }
    }

    std::map<std::string, std::vector<size_t>> participants;
    for (size_t mi = 0; mi < n_modules; ++mi)
        for (const auto& l : network.modules[mi].alphabet()) participants[l].push_back(mi);

    auto normalize = [&](std::vector<std::int32_t>& v) {
        for (size_t mi = 0; mi < n_modules; ++mi) {
            const auto& act = active[mi][static_cast<size_t>(v[mi])];
            for (size_t k = 0; k < act.size(); ++k)
                if (!act[k]) v[clock_base[mi] + k] = 0;
        }
    };
    auto enabled = [&](const Command& c, size_t mi, const std::vector<std::int32_t>& v) {
        if (v[mi] != c.location) return false;
        for (const auto& w : c.windows) {
            std::int64_t x = v[w.slot];
            if (x < w.lower) return false;
            if (w.upper) {
                if (x > *w.upper) return false;
                if (deadline && x != *w.upper) return false;
            }
        }
        return true;
    };

    std::unordered_map<std::vector<std::int32_t>, StateId, ValuationHash> index;
    std::deque<std::vector<std::int32_t>> pending_states;
    auto intern = [&](std::vector<std::int32_t> v) -> StateId {
        auto it = index.find(v);
        if (it != index.end()) return it->second;
        if (index.size() >= options.max_states)
            throw ModelError("state space exceeds " + std::to_string(options.max_states) + " states");
        StateId id = static_cast<StateId>(index.size());
        index.emplace(v, id);
        mdp.valuations.insert(mdp.valuations.end(), v.begin(), v.end());
        mdp.actions.emplace_back();
        pending_states.push_back(std::move(v));
        return id;
    };

    std::vector<std::int32_t> init(width, 0);
    normalize(init);
    mdp.initial = intern(init);

    for (StateId current = 0; !pending_states.empty(); ++current) {
        std::vector<std::int32_t> v = std::move(pending_states.front());
        pending_states.pop_front();
        std::vector<MdpAction> acts;

        // Joint move of several modules: choice[i] is the command picked in
        // module mods[i]; branches are the product of their effects.
        auto emit = [&](const std::string& label, const std::vector<size_t>& mods, const std::vector<const Command*>& choice) {
            MdpAction action{label, false, {}};
            std::vector<size_t> digit(mods.size(), 0);
            while (true) {
                std::vector<std::int32_t> next = v;
                Probability p = 1;
                for (size_t i = 0; i < mods.size(); ++i) {
                    const Effect& e = choice[i]->effects[digit[i]];
                    p *= e.prob;
                    next[mods[i]] = e.location;
                    for (size_t r : e.resets) next[r] = 0;
                    for (const auto& [slot, val] : e.flags) next[slot] = val;
                }
                normalize(next);
                StateId target = intern(std::move(next));
                auto same = std::find_if(action.branches.begin(), action.branches.end(),
                                         [&](const MdpBranch& b) { return b.target == target; });
                if (same != action.branches.end()) same->prob += p;
                else action.branches.push_back({std::move(p), 0.0, target});
                size_t i = 0;
                for (; i < mods.size(); ++i) {
                    if (++digit[i] < choice[i]->effects.size()) break;
                    digit[i] = 0;
                }
                if (i == mods.size()) break;
            }
            bool stutter = std::all_of(action.branches.begin(), action.branches.end(),
                                       [&](const MdpBranch& b) { return b.target == current; });
            if (stutter) return;
            for (auto& b : action.branches) b.prob_value = to_double(b.prob);
            acts.push_back(std::move(action));
        };

        for (size_t mi = 0; mi < n_modules; ++mi)
            for (const auto& c : commands[mi])
                if (c.label.empty() && enabled(c, mi, v)) emit("", {mi}, {&c});

        for (const auto& [label, mods] : participants) {
            std::vector<std::vector<const Command*>> options_per_module;
            bool all = true;
            for (size_t mi : mods) {
                std::vector<const Command*> ready;
                for (const auto& c : commands[mi])
                    if (c.label == label && enabled(c, mi, v)) ready.push_back(&c);
                if (ready.empty()) {
                    all = false;
                    break;
                }
                options_per_module.push_back(std::move(ready));
            }
            if (!all) continue;
            std::vector<size_t> pick(mods.size(), 0);
            while (true) {
                std::vector<const Command*> choice(mods.size());
                for (size_t i = 0; i < mods.size(); ++i) choice[i] = options_per_module[i][pick[i]];
                emit(label, mods, choice);
                size_t i = 0;
                for (; i < mods.size(); ++i) {
                    if (++pick[i] < options_per_module[i].size()) break;
                    pick[i] = 0;
                }
                if (i == mods.size()) break;
            }
        }

        if (!deadline || acts.empty()) {
            std::vector<std::int32_t> next = v;
            for (size_t slot = n_modules; slot < width; ++slot)
                if (clock_bound[slot] > 0 && next[slot] < clock_bound[slot]) ++next[slot];
            normalize(next);
            StateId target = intern(std::move(next));
            acts.push_back({"tick", true, {{Probability(1), 1.0, target}}});
        }
        mdp.actions[current] = std::move(acts);
    }

    reject_zero_time_cycles(mdp);
    return mdp;
}

}  // namespace prtspace
