#include "prtspace/checker.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace prtspace {

Tick default_horizon_cap() {
    if (const char* env = std::getenv("PRTSPACE_HORIZON_CAP")) {
        char* end = nullptr;
        long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<Tick>(v);
    }
    return 100000;
}

namespace {

std::vector<char> target_mask(const DigitalMdp& mdp, const Expr& target) {
    std::optional<BoundExpr> bound;
    try {
        bound.emplace(target, mdp.variables);
    } catch (const ExprError& e) {
        throw CheckError(std::string("target: ") + e.what());
    }
    std::vector<char> mask(mdp.state_count());
    for (StateId s = 0; s < mdp.state_count(); ++s) mask[s] = bound->evaluate(mdp.valuation(s)) ? 1 : 0;
    return mask;
}

// States reachable at each elapsed time, each layer in an order where
// zero-time successors come before their predecessors.
class Unfolding {
public:
    Unfolding(const DigitalMdp& mdp, const std::vector<char>& is_target, Tick horizon)
        : mdp_(mdp), target_(is_target), mark_(mdp.state_count(), 0) {
        std::vector<StateId> seeds{mdp.initial};
        for (Tick t = 0; t <= horizon && !seeds.empty(); ++t) {
            layers_.push_back(close(seeds));
            seeds.clear();
            ++stamp_;
            for (StateId s : layers_.back()) {
                if (target_[s]) continue;
                for (const auto& a : mdp_.actions[s]) {
                    if (!a.tick) continue;
                    for (const auto& b : a.branches)
                        if (mark_[b.target] != stamp_) {
                            mark_[b.target] = stamp_;
                            seeds.push_back(b.target);
                        }
                }
            }
        }
    }

    const std::vector<std::vector<StateId>>& layers() const { return layers_; }

private:
    std::vector<StateId> close(const std::vector<StateId>& seeds) {
        ++stamp_;
        std::vector<StateId> order;
        struct Frame {
            StateId state;
            size_t action = 0, branch = 0;
        };
        std::vector<Frame> stack;
        for (StateId seed : seeds) {
            if (mark_[seed] == stamp_) continue;
            mark_[seed] = stamp_;
            stack.push_back({seed});
            while (!stack.empty()) {
                Frame& f = stack.back();
                bool descended = false;
                if (!target_[f.state]) {
                    const auto& acts = mdp_.actions[f.state];
                    while (f.action < acts.size()) {
                        const auto& a = acts[f.action];
                        if (a.tick || f.branch >= a.branches.size()) {
                            ++f.action;
                            f.branch = 0;
                            continue;
                        }
                        StateId next = a.branches[f.branch++].target;
                        if (mark_[next] != stamp_) {
                            mark_[next] = stamp_;
                            stack.push_back({next});
                            descended = true;
                            break;
                        }
                    }
                }
                if (!descended) {
                    order.push_back(stack.back().state);
                    stack.pop_back();
                }
            }
        }
        return order;
    }

    const DigitalMdp& mdp_;
    const std::vector<char>& target_;
    std::vector<std::uint32_t> mark_;
    std::uint32_t stamp_ = 0;
    std::vector<std::vector<StateId>> layers_;
};

inline const Probability& branch_weight(const MdpBranch& b, const Probability*) { return b.prob; }
inline double branch_weight(const MdpBranch& b, const double*) { return b.prob_value; }

template <class V>
V evaluate(const DigitalMdp& mdp, const std::vector<char>& is_target, const Unfolding& unfolding, Tick bound,
           OptMode mode, std::size_t& explored) {
    const auto& layers = unfolding.layers();
    const std::size_t last = std::min<std::size_t>(static_cast<std::size_t>(bound) + 1, layers.size());
    std::vector<std::uint32_t> slot_cur(mdp.state_count()), slot_next(mdp.state_count());
    std::vector<V> cur, next;
    explored = 0;
    const V zero(0), one(1);
    const V* tag = nullptr;

    for (std::size_t t = last; t-- > 0;) {
        const auto& layer = layers[t];
        explored += layer.size();
        cur.assign(layer.size(), zero);
        for (std::uint32_t i = 0; i < layer.size(); ++i) slot_cur[layer[i]] = i;
        const bool has_next = t + 1 < last;

        for (std::uint32_t i = 0; i < layer.size(); ++i) {
            StateId s = layer[i];
            if (is_target[s]) {
                cur[i] = one;
                continue;
            }
            bool any = false;
            V best = zero;
            for (const auto& a : mdp.actions[s]) {
                V value = zero;
                if (a.tick) {
                    if (has_next)
                        for (const auto& b : a.branches) value += branch_weight(b, tag) * next[slot_next[b.target]];
                } else {
                    for (const auto& b : a.branches) value += branch_weight(b, tag) * cur[slot_cur[b.target]];
                }
                if (!any || (mode == OptMode::Max ? value > best : value < best)) best = value;
                any = true;
            }
            cur[i] = any ? best : zero;
        }
        std::swap(cur, next);
        std::swap(slot_cur, slot_next);
    }
    // After the final swap the initial layer's values live in `next`; the
    // initial state is the first seed and therefore present in layer 0.
    if (last == 0) return zero;
    return next[slot_next[mdp.initial]];
}

void check_bound(Tick bound, const CheckOptions& options) {
    if (bound < 0) throw CheckError("time bound must be non-negative");
    if (bound > options.horizon_cap)
        throw CheckError("time bound " + std::to_string(bound) + " exceeds the horizon cap of " +
                         std::to_string(options.horizon_cap) + " ticks");
}

Probability evaluate_any(const DigitalMdp& mdp, const std::vector<char>& mask, const Unfolding& unfolding, Tick bound,
                         OptMode mode, const CheckOptions& options, std::size_t& explored) {
    if (options.arithmetic == Arithmetic::Double)
        return from_double(evaluate<double>(mdp, mask, unfolding, bound, mode, explored));
    return evaluate<Probability>(mdp, mask, unfolding, bound, mode, explored);
}

}  // namespace

ReachabilityResult check_bounded_reachability(const DigitalMdp& mdp, const ReachabilityQuery& query,
                                              const CheckOptions& options) {
    check_bound(query.bound, options);
    validate_mdp(mdp);
    auto mask = target_mask(mdp, query.target);
    Unfolding unfolding(mdp, mask, query.bound);
    ReachabilityResult result;
    result.probability = evaluate_any(mdp, mask, unfolding, query.bound, query.mode, options, result.states_explored);
    result.iterations = unfolding.layers().size();
    return result;
}

std::vector<HistogramBin> DensityResult::bins() const {
    std::vector<HistogramBin> out;
    Tick previous = -1;
    for (const auto& p : points) {
        out.push_back({previous + 1, p.bound - previous, p.density});
        previous = p.bound;
    }
    return out;
}

DensityResult density_sweep(const DigitalMdp& mdp, const Expr& target, const std::vector<Tick>& grid, OptMode mode,
                            const CheckOptions& options) {
    if (grid.empty()) return {};
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw CheckError("density grid must be strictly ascending");
    for (Tick t : grid) check_bound(t, options);
    validate_mdp(mdp);
    auto mask = target_mask(mdp, target);
    Unfolding unfolding(mdp, mask, grid.back());

    DensityResult result;
    Probability previous = 0;
    for (Tick t : grid) {
        std::size_t explored = 0;
        Probability cumulative = evaluate_any(mdp, mask, unfolding, t, mode, options, explored);
        result.points.push_back({t, cumulative, cumulative - previous});
        previous = cumulative;
    }
    return result;
}

std::vector<Probability> reachability_profile(const DigitalMdp& mdp, const Expr& target, Tick max_bound, OptMode mode,
                                              const CheckOptions& options) {
    check_bound(max_bound, options);
    validate_mdp(mdp);
    auto mask = target_mask(mdp, target);
    const StateId n = static_cast<StateId>(mdp.state_count());

    // Zero-time successors before predecessors.
    std::vector<StateId> order;
    std::vector<char> seen(n, 0);
    for (StateId root = 0; root < n; ++root) {
        if (seen[root]) continue;
        std::vector<std::pair<StateId, size_t>> stack{{root, 0}};
        seen[root] = 1;
        while (!stack.empty()) {
            auto& [s, k] = stack.back();
            std::vector<StateId> succ;
            bool pushed = false;
            if (!mask[s]) {
                size_t idx = 0;
                for (const auto& a : mdp.actions[s]) {
                    if (a.tick) continue;
                    for (const auto& b : a.branches) {
                        if (idx++ < k) continue;
                        ++k;
                        if (!seen[b.target]) {
                            seen[b.target] = 1;
                            stack.push_back({b.target, 0});
                            pushed = true;
                            break;
                        }
                    }
                    if (pushed) break;
                }
            }
            if (!pushed) {
                order.push_back(stack.back().first);
                stack.pop_back();
            }
        }
    }

    std::vector<Probability> prev(n), cur(n), profile;
    for (Tick k = 0; k <= max_bound; ++k) {
        for (StateId s : order) {
            if (mask[s]) {
                cur[s] = 1;
                continue;
            }
            bool any = false;
            Probability best = 0;
            for (const auto& a : mdp.actions[s]) {
                Probability value = 0;
                if (a.tick) {
                    if (k > 0)
                        for (const auto& b : a.branches) value += b.prob * prev[b.target];
                } else {
                    for (const auto& b : a.branches) value += b.prob * cur[b.target];
                }
                if (!any || (mode == OptMode::Max ? value > best : value < best)) best = value;
                any = true;
            }
            cur[s] = best;
        }
        profile.push_back(cur[mdp.initial]);
        std::swap(prev, cur);
    }
    return profile;
}

std::pair<Probability, Probability> min_max_gap(const DigitalMdp& mdp, const Expr& target, Tick bound,
                                                const CheckOptions& options) {
    check_bound(bound, options);
    validate_mdp(mdp);
    auto mask = target_mask(mdp, target);
    Unfolding unfolding(mdp, mask, bound);
    std::size_t explored = 0;
    Probability lo = evaluate_any(mdp, mask, unfolding, bound, OptMode::Min, options, explored);
    Probability hi = evaluate_any(mdp, mask, unfolding, bound, OptMode::Max, options, explored);
    return {lo, hi};
}

}  // namespace prtspace
