#pragma once

// Offline admissible-action synthesis over the grid abstraction.
//
// Every (state, action) pair is evaluated once at the state's representative,
// giving a deterministic transition table. The viable feasible set is then the
// fixed point of repeatedly discarding states that have no hard-safe action
// whose successor is still a candidate.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "hyshield/abstraction.hpp"
#include "hyshield/actions.hpp"
#include "hyshield/constraints.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/vehicle.hpp"

namespace hyshield {

inline constexpr StateId kNoSuccessor = std::numeric_limits<StateId>::max();

struct Transition {
    bool safe = false;
    StateId successor = kNoSuccessor;
};

/// Dense (state, action) -> Transition table.
class TransitionTable {
public:
    TransitionTable() = default;
    TransitionTable(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states), num_actions_(num_actions), data_(num_states * num_actions) {}

    /// Fills the table from `fn(state, action)`. `fn` must be thread-safe when threads > 1.
    template <typename Fn>
    static TransitionTable build(std::size_t num_states, std::size_t num_actions, Fn&& fn, unsigned threads = 1) {
        TransitionTable t(num_states, num_actions);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t s = begin; s < end; ++s)
                for (std::size_t a = 0; a < num_actions; ++a)
                    t.data_[s * num_actions + a] = fn(static_cast<StateId>(s), static_cast<ActionId>(a));
        };
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, num_states))));
        if (threads == 1) {
            work(0, num_states);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (num_states + threads - 1) / threads;
            for (unsigned k = 0; k < threads; ++k) {
                const std::size_t b = k * chunk;
                const std::size_t e = std::min(num_states, b + chunk);
                if (b < e) pool.emplace_back(work, b, e);
            }
            for (auto& th : pool) th.join();
        }
        return t;
    }

    [[nodiscard]] const Transition& at(StateId s, ActionId a) const { return data_[s * num_actions_ + a]; }
    Transition& at(StateId s, ActionId a) { return data_[s * num_actions_ + a]; }
    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] std::size_t num_actions() const { return num_actions_; }

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<Transition> data_;
};

enum class SweepOrder {
    jacobi,              ///< each sweep reads the previous sweep's candidate set
    ascending_in_place,  ///< removals visible immediately, ascending ids
    descending_in_place, ///< removals visible immediately, descending ids
};

class ViabilityResult {
public:
    ViabilityResult() = default;
    ViabilityResult(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states), num_actions_(num_actions), feasible_(num_states, 0), mask_(num_states),
          successor_(num_states * num_actions, kNoSuccessor) {}

    [[nodiscard]] bool is_feasible(StateId s) const { return s < num_states_ && feasible_[s] != 0; }

    [[nodiscard]] ActionMask admissible_mask(StateId s) const {
        if (!is_feasible(s)) throw ContractError("admissible mask queried for an infeasible state");
        return mask_[s];
    }

    [[nodiscard]] StateId successor(StateId s, ActionId a) const { return successor_[s * num_actions_ + a]; }

    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] std::size_t num_actions() const { return num_actions_; }
    [[nodiscard]] std::size_t feasible_count() const {
        return static_cast<std::size_t>(std::count(feasible_.begin(), feasible_.end(), 1));
    }
    [[nodiscard]] bool empty() const { return feasible_count() == 0; }
    [[nodiscard]] int sweeps() const { return sweeps_; }
    [[nodiscard]] std::uint64_t fingerprint() const { return fingerprint_; }
    void set_fingerprint(std::uint64_t f) { fingerprint_ = f; }

    [[nodiscard]] std::vector<StateId> feasible_states() const {
        std::vector<StateId> out;
        for (StateId s = 0; s < num_states_; ++s)
            if (feasible_[s]) out.push_back(s);
        return out;
    }

    /// Raw mask storage (zero for infeasible states); used by persistence.
    [[nodiscard]] ActionMask raw_mask(StateId s) const { return mask_[s]; }

    /// Rebuilds a result from stored parts, checking the structural invariants.
    static ViabilityResult from_parts(std::size_t num_states, std::size_t num_actions, std::vector<ActionMask> masks,
                                      std::vector<StateId> successors, int sweeps, std::uint64_t fingerprint) {
        if (masks.size() != num_states || successors.size() != num_states * num_actions)
            throw ArtifactMismatch("viability artifact has inconsistent sizes");
        ViabilityResult r(num_states, num_actions);
        for (StateId s = 0; s < num_states; ++s) r.feasible_[s] = masks[s].empty() ? 0 : 1;
        for (StateId s = 0; s < num_states; ++s)
            for (ActionId a = 0; a < num_actions; ++a) {
                const StateId n = successors[s * num_actions + a];
                if (masks[s].contains(a) != (n != kNoSuccessor))
                    throw ArtifactMismatch("viability artifact successor table disagrees with masks");
                if (n != kNoSuccessor && (n >= num_states || !r.feasible_[n]))
                    throw ArtifactMismatch("viability artifact has a non-viable successor");
            }
        r.mask_ = std::move(masks);
        r.successor_ = std::move(successors);
        r.sweeps_ = sweeps;
        r.fingerprint_ = fingerprint;
        return r;
    }

    friend ViabilityResult compute_feasible_set(const TransitionTable&, SweepOrder);

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::uint8_t> feasible_;
    std::vector<ActionMask> mask_;
    std::vector<StateId> successor_;
    int sweeps_ = 0;
    std::uint64_t fingerprint_ = 0;
};

/// Actions of `s` that are hard-safe and land in `candidate`.
inline ActionMask viable_actions(const TransitionTable& t, const std::vector<std::uint8_t>& candidate, StateId s) {
    ActionMask m;
    for (ActionId a = 0; a < t.num_actions(); ++a) {
        const auto& tr = t.at(s, a);
        if (tr.safe && tr.successor != kNoSuccessor && candidate[tr.successor]) m.insert(a);
    }
    return m;
}

/// One Jacobi pruning sweep; returns how many states it removed from `candidate`.
inline std::size_t prune_sweep(const TransitionTable& t, std::vector<std::uint8_t>& candidate) {
    std::vector<StateId> drop;
    for (StateId s = 0; s < t.num_states(); ++s)
        if (candidate[s] && viable_actions(t, candidate, s).empty()) drop.push_back(s);
    for (StateId s : drop) candidate[s] = 0;
    return drop.size();
}

inline ViabilityResult compute_feasible_set(const TransitionTable& t, SweepOrder order = SweepOrder::jacobi) {
    const std::size_t n = t.num_states();
    std::vector<std::uint8_t> candidate(n, 1);
    int sweeps = 0;
    for (;;) {
        ++sweeps;
        std::size_t removed = 0;
        if (order == SweepOrder::jacobi) {
            removed = prune_sweep(t, candidate);
        } else {
            for (std::size_t k = 0; k < n; ++k) {
                const auto s = static_cast<StateId>(order == SweepOrder::ascending_in_place ? k : n - 1 - k);
                if (candidate[s] && viable_actions(t, candidate, s).empty()) {
                    candidate[s] = 0;
                    ++removed;
                }
            }
        }
        if (removed == 0) break;
    }

    ViabilityResult r(n, t.num_actions());
    r.feasible_ = candidate;
    r.sweeps_ = sweeps;
    for (StateId s = 0; s < n; ++s) {
        if (!candidate[s]) continue;
        r.mask_[s] = viable_actions(t, candidate, s);
        for (ActionId a : r.mask_[s].ids()) r.successor_[s * t.num_actions() + a] = t.at(s, a).successor;
    }
    return r;
}

/// Continuous-model side of the shield: one-step hard-safety at representatives.
class ShieldModel {
public:
    ShieldModel(VehicleDynamics dynamics, HardLimits hard, GridSpec grid, ActionGrid actions, double dt,
                int hold_steps = 1, bool hull_exit_unsafe = false, bool cellwise = false)
        : dynamics_(std::move(dynamics)), hard_(hard), grid_(grid), actions_(std::move(actions)), dt_(dt),
          hold_steps_(hold_steps), hull_exit_unsafe_(hull_exit_unsafe), cellwise_(cellwise) {
        grid_.validate();
        actions_.validate();
        if (!(dt_ > 0.0)) throw std::invalid_argument("time step must be positive");
        if (hold_steps_ < 1) throw std::invalid_argument("hold steps must be >= 1");
        if (cellwise_) build_cell_safety();
    }

    /// True when every corner of cell s satisfies the hard limits under action a.
    [[nodiscard]] bool cell_hard_safe(StateId s, ActionId a) const {
        if (!cellwise_) return true;
        return cell_safe_[static_cast<std::size_t>(s) * actions_.alpha_levels() + actions_.alpha_index(a)] != 0;
    }

    /// Steps x under action a; safe iff all hard constraints hold at the successor.
    /// Integration failures count as unsafe.
    [[nodiscard]] Transition step_from(const VehicleState& x, ActionId a) const {
        const auto u = actions_.control(a);
        try {
            const auto next = dynamics_.rk2_step(x, u, dt_);
            const bool safe = hard_constraints_hold(dynamics_.model(), hard_, next, u);
            return {safe, project(next, grid_).id};
        } catch (const IntegrationError&) {
            return {false, kNoSuccessor};
        }
    }

    /// Holds action a from x until its cell changes (at most hold_steps steps), with the
    /// same checks as the abstract transition.
    [[nodiscard]] Transition hold_from(const VehicleState& x0, ActionId a) const {
        const auto u = actions_.control(a);
        VehicleState x = x0;
        const StateId s = project(x0, grid_).id;
        try {
            for (int k = 0; k < hold_steps_; ++k) {
                x = dynamics_.rk2_step(x, u, dt_);
                if (!hard_constraints_hold(dynamics_.model(), hard_, x, u)) return {false, kNoSuccessor};
                if (hull_exit_unsafe_ && !within_grid_guard(x, grid_, 0.0)) return {false, kNoSuccessor};
                const StateId next = project(x, grid_).id;
                if (!cell_hard_safe(next, a)) return {false, kNoSuccessor};
                if (next != s) return {true, next};
            }
        } catch (const IntegrationError&) {
            return {false, kNoSuccessor};
        }
        return {true, s};
    }

    /// Holds action a from the representative of s until the projected cell changes
    /// (at most hold_steps steps), requiring hard safety after every step.
    [[nodiscard]] Transition one_step_hard_safe(StateId s, ActionId a) const {
        return hold_from(representative(s, grid_), a);
    }

    [[nodiscard]] TransitionTable transitions(unsigned threads = std::thread::hardware_concurrency()) const {
        return TransitionTable::build(
            grid_.size(), actions_.size(), [this](StateId s, ActionId a) { return one_step_hard_safe(s, a); },
            threads);
    }

    [[nodiscard]] ViabilityResult compute(SweepOrder order = SweepOrder::jacobi) const {
        return compute_feasible_set(transitions(), order);
    }

    [[nodiscard]] const VehicleDynamics& dynamics() const { return dynamics_; }
    [[nodiscard]] const HardLimits& hard_limits() const { return hard_; }
    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] const ActionGrid& actions() const { return actions_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] int hold_steps() const { return hold_steps_; }
    [[nodiscard]] bool hull_exit_unsafe() const { return hull_exit_unsafe_; }

private:
    VehicleDynamics dynamics_;
    HardLimits hard_;
    GridSpec grid_;
    ActionGrid actions_;
    double dt_;
    int hold_steps_;
    bool hull_exit_unsafe_;
    bool cellwise_;
    std::vector<std::uint8_t> cell_safe_;

    void build_cell_safety() {
        const std::size_t n = grid_.size();
        const std::size_t na = actions_.alpha_levels();
        cell_safe_.assign(n * na, 0);
        for (StateId s = 0; s < n; ++s) {
            const auto idx = unflatten(s, grid_);
            for (std::size_t ia = 0; ia < na; ++ia) {
                const ControlInput u{deg2rad(actions_.alpha_deg[ia]), actions_.delta.front()};
                bool ok = true;
                for (unsigned c = 0; c < (1u << kStateDims) && ok; ++c) {
                    std::array<double, kStateDims> v{};
                    for (std::size_t d = 0; d < kStateDims; ++d)
                        v[d] = grid_.axes[d].edge(idx[d] + static_cast<int>((c >> d) & 1u));
                    ok = hard_constraints_hold(dynamics_.model(), hard_, {v[0], v[1], v[2], v[3]}, u);
                }
                cell_safe_[s * na + ia] = ok ? 1 : 0;
            }
        }
    }
};

} // namespace hyshield
