#pragma once

// Shielded tabular Q-learning: mode-dependent reward, local-first masked
// epsilon-greedy selection, mask-consistent backups, episode chaining.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "hyshield/abstraction.hpp"
#include "hyshield/actions.hpp"
#include "hyshield/constraints.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/viability.hpp"

namespace hyshield {

enum class Mode : std::uint8_t { safe, unsafe };

inline std::string_view to_string(Mode m) { return m == Mode::safe ? "safe" : "unsafe"; }

struct RewardConfig {
    double w_h = 4.0e-8;
    double w_V = 4.0e-6;
    double w_gamma = 0.04;
    double w_u = 1.0e-4;
    double w_du = 5.0e-3;
    double lambda_delta = 25.0;
    double c_out = 50.0;
    double w_d = 25.0;
    double w_imp = 150.0;
    double c_away = 10.0;
};

struct LearnerConfig {
    double discount = 0.99;
    double learn_rate = 0.1;
    double eps_start = 0.2;
    double eps_end = 0.02;
    double eps_decay = 0.995; ///< per-episode multiplicative factor
    int r_max = 2;
    int horizon = 400;
    int episodes = 500;
    double q_init = 0.0;
    double guard_value = 0.0;     ///< value credited after a guard termination
    double violation_value = 0.0; ///< value credited after a hard violation
    int max_hold = 1;             ///< steps an action is held within one cell before re-deciding
    bool bootstrap_tried = false; ///< bootstrap only from successor actions visited at least once
    double unknown_value = 0.0;   ///< bootstrap value of a successor with no visited action
    bool count_rate = false;      ///< learning rate floored at 1/visits
    bool scatter_guard_resets = false; ///< after a guard stop, restart from a random feasible cell
    bool mode_augmented = false;       ///< Q indexed by (cell, mode); reserved, not implemented
    std::uint64_t seed = 1;

    [[nodiscard]] double epsilon(int episode) const {
        return std::max(eps_end, eps_start * std::pow(eps_decay, episode));
    }

    void validate() const {
        if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
        if (!(learn_rate > 0.0 && learn_rate < 1.0)) throw std::invalid_argument("learning rate must lie in (0, 1)");
        if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
            throw std::invalid_argument("epsilon must lie in [0, 1]");
        if (!(eps_decay > 0.0 && eps_decay <= 1.0)) throw std::invalid_argument("epsilon decay must lie in (0, 1]");
        if (r_max < 1) throw std::invalid_argument("r_max must be >= 1");
        if (max_hold < 1) throw std::invalid_argument("max_hold must be >= 1");
        if (horizon < 1 || episodes < 0) throw std::invalid_argument("horizon/episodes out of range");
        if (mode_augmented) throw std::invalid_argument("mode-augmented Q-table is not supported");
    }
};

/// Explicit, seedable generator. Draws are derived from raw 64-bit output so the
/// stream does not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

inline double switching_penalty(const ActionGrid& actions, ActionId a, ActionId a_prev, const RewardConfig& w) {
    const auto u = actions.control(a);
    const auto p = actions.control(a_prev);
    const double da = u.alpha - p.alpha;
    const double dd = u.delta - p.delta;
    return w.w_du * (da * da + w.lambda_delta * dd * dd);
}

inline double tracking_loss(const VehicleState& x, const SafetyBox& box, const RewardConfig& w) {
    const double eh = x.h - box.h_star;
    const double eV = x.V - box.V_star;
    const double eg = x.gamma - box.gamma_star;
    return w.w_h * eh * eh + w.w_V * eV * eV + w.w_gamma * eg * eg;
}

inline double effort(const ControlInput& u) { return u.alpha * u.alpha + u.delta * u.delta; }

inline double reward(const ActionGrid& actions, const SafetyBox& box, const RewardConfig& w, const VehicleState& x,
                     ActionId a, ActionId a_prev, const VehicleState& x_next, Mode mode) {
    const double common = w.w_u * effort(actions.control(a)) + switching_penalty(actions, a, a_prev, w);
    if (mode == Mode::safe) return -tracking_loss(x_next, box, w) - common;
    const double d0 = box_distance(x, box);
    const double d1 = box_distance(x_next, box);
    return -w.c_out - w.w_d * d0 - common - (d1 > d0 ? w.c_away : 0.0) + w.w_imp * std::max(d0 - d1, 0.0);
}

struct LocalSelection {
    ActionMask actions;
    int radius = 0;        ///< 0 when no previous action was given
    bool fallback = false; ///< no admissible action within r_max of a_prev
};

/// Admissible actions nearest to a_prev: the smallest r in [1, r_max] with a
/// non-empty intersection, else the full mask.
inline LocalSelection local_admissible(const ActionGrid& actions, ActionMask mask, ActionId a_prev, int r_max) {
    for (int r = 1; r <= r_max; ++r) {
        const auto local = mask & actions.neighborhood(a_prev, r);
        if (!local.empty()) return {local, r, false};
    }
    return {mask, r_max, true};
}

/// Dense |S| x |A| action-value table.
class QTable {
public:
    QTable() = default;
    QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0)
        : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, init),
          visits_(num_states * num_actions, 0) {}

    [[nodiscard]] double operator()(StateId s, ActionId a) const { return values_[index(s, a)]; }
    double& operator()(StateId s, ActionId a) { return values_[index(s, a)]; }
    [[nodiscard]] std::uint32_t visits(StateId s, ActionId a) const { return visits_[index(s, a)]; }

    /// Members of `mask` with at least one recorded visit in s.
    [[nodiscard]] ActionMask tried(StateId s, ActionMask mask) const {
        ActionMask out;
        for (ActionId a : mask.ids())
            if (visits(s, a) > 0) out.insert(a);
        return out;
    }
    void count_visit(StateId s, ActionId a) { ++visits_[index(s, a)]; }

    /// argmax over `candidates`, ties broken by lowest action id.
    [[nodiscard]] ActionId argmax(StateId s, ActionMask candidates) const {
        if (candidates.empty()) throw ContractError("argmax over an empty action set");
        ActionId best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        bool first = true;
        for (ActionId a : candidates.ids()) {
            const double v = (*this)(s, a);
            if (first || v > best_v) {
                best = a;
                best_v = v;
                first = false;
            }
        }
        return best;
    }

    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] std::size_t num_actions() const { return num_actions_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] const std::vector<std::uint32_t>& visit_counts() const { return visits_; }
    std::vector<double>& values() { return values_; }
    std::vector<std::uint32_t>& visit_counts() { return visits_; }

    std::uint64_t fingerprint = 0;

private:
    [[nodiscard]] std::size_t index(StateId s, ActionId a) const {
        if (s >= num_states_ || a >= num_actions_) throw std::out_of_range("Q-table index");
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> values_;
    std::vector<std::uint32_t> visits_;
};

/// Masked epsilon-greedy draw from an already localized candidate set.
inline ActionId select_action(const QTable& q, StateId s, ActionMask candidates, double eps, Rng& rng) {
    if (candidates.empty()) throw ContractError("no candidate actions");
    if (candidates.size() == 1) return candidates.ids().front();
    if (eps > 0.0 && rng.uniform01() < eps) {
        const auto ids = candidates.ids();
        return ids[rng.below(ids.size())];
    }
    return q.argmax(s, candidates);
}

/// Counts any backup that reads a successor entry outside the successor's mask.
struct BackupAudit {
    std::uint64_t backups = 0;
    std::uint64_t inadmissible_reads = 0;
};

/// Q(s,a) += lr * (r + discount * max_{a' in mask_next} Q(s_next, a') - Q(s,a)).
/// `admissible_next` is the authoritative successor mask used for auditing reads.
inline double q_update(QTable& q, StateId s, ActionId a, double r, StateId s_next, ActionMask mask_s,
                       ActionMask mask_next, double lr, double discount, BackupAudit* audit = nullptr,
                       const ActionMask* admissible_next = nullptr) {
    if (!mask_s.contains(a)) throw ContractError("backup for an action outside the admissible mask");
    if (mask_next.empty()) throw ContractError("backup with an empty successor mask");
    double best = -std::numeric_limits<double>::infinity();
    for (ActionId b : mask_next.ids()) {
        if (audit && admissible_next && !admissible_next->contains(b)) ++audit->inadmissible_reads;
        best = std::max(best, q(s_next, b));
    }
    if (audit) ++audit->backups;
    double& entry = q(s, a);
    entry += lr * (r + discount * best - entry);
    q.count_visit(s, a);
    return entry;
}

/// Backup for a transition that ends the episode (no bootstrap).
inline double q_update_terminal(QTable& q, StateId s, ActionId a, double r, ActionMask mask_s, double lr) {
    if (!mask_s.contains(a)) throw ContractError("backup for an action outside the admissible mask");
    double& entry = q(s, a);
    entry += lr * (r - entry);
    q.count_visit(s, a);
    return entry;
}

enum class Termination : std::uint8_t { horizon, hard_violation, guard };

inline std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::horizon: return "horizon";
    case Termination::hard_violation: return "hard_violation";
    case Termination::guard: return "guard";
    }
    return "?";
}

struct StepRecord {
    double t = 0.0;
    VehicleState x;
    ActionId action = 0;
    ControlInput u;
    double reward = 0.0;
    Mode mode = Mode::safe;
    double distance = 0.0;
    ViolationVector flags; ///< evaluated at the successor with the applied input
    int mask_size = 0;
    int radius = 0;
    bool fallback = false;
    bool in_mask = true; ///< executed action belongs to the abstract mask of the current cell
};

struct EpisodeResult {
    std::vector<StepRecord> steps;
    Termination cause = Termination::horizon;
    VehicleState terminal;
    double total_reward = 0.0;
    int hard_violations = 0;
    int safe_steps = 0;
    int unsafe_steps = 0;
    int fallbacks = 0;
    int online_overrides = 0;
};

struct ShieldOptions {
    bool enabled = true;      ///< restrict choices to the viability mask
    bool online_check = false; ///< re-verify the mask at the continuous state
    double guard_bins = 1.0;  ///< hull tolerance before guard termination
};

struct EpisodeLog {
    int episode = 0;
    VehicleState start;
    VehicleState terminal;
    int steps = 0;
    Termination cause = Termination::horizon;
    double total_reward = 0.0;
    int hard_violations = 0;
    int safe_steps = 0;
    int unsafe_steps = 0;
    int fallbacks = 0;
    double epsilon = 0.0;
    bool reset_to_nominal = false; ///< this episode started from the nominal state by reset
};

struct TrainingResult {
    QTable q;
    std::vector<EpisodeLog> episodes;
    BackupAudit audit;
};

/// Couples the shield, the abstraction and the reward into an episodic learner.
class ShieldedLearner {
public:
    ShieldedLearner(const ShieldModel& model, const ViabilityResult& viability, ConstraintSet limits, SafetyBox box,
                    RewardConfig rewards, LearnerConfig learner, ShieldOptions shield = {})
        : model_(&model), viability_(&viability), limits_(limits), box_(box), rewards_(rewards), learner_(learner),
          shield_(shield), feasible_(viability.feasible_states()) {
        learner_.validate();
        if (viability.num_states() != model.grid().size() || viability.num_actions() != model.actions().size())
            throw ArtifactMismatch("viability result does not match the grid/action configuration");
    }

    [[nodiscard]] Mode mode_of(StateId s) const {
        if (!viability_->is_feasible(s)) throw ContractError("mode queried for an infeasible state");
        return mode_unchecked(s);
    }

    [[nodiscard]] QTable make_table() const {
        return QTable(model_->grid().size(), model_->actions().size(), learner_.q_init);
    }

    /// Mask used for selection at continuous state x in cell s.
    [[nodiscard]] ActionMask selection_mask(const VehicleState& x, StateId s, bool* overridden = nullptr) const {
        if (!shield_.enabled) return ActionMask::all(model_->actions().size());
        const ActionMask mask = viability_->admissible_mask(s);
        if (!shield_.online_check) return mask;
        ActionMask verified, hard_safe;
        for (ActionId a : mask.ids()) {
            const auto tr = model_->hold_from(x, a);
            if (!tr.safe) continue;
            hard_safe.insert(a);
            if (viability_->is_feasible(tr.successor)) verified.insert(a);
        }
        if (verified.empty()) verified = hard_safe;
        if (verified.empty()) return mask;
        if (overridden) *overridden = verified != mask;
        return verified;
    }

    /// One episode from x0. With `learn` the table is updated in place.
    ///
    /// A decision is made on entering a new cell, or after `max_hold` steps in the same
    /// cell; the action is held in between and the decision is backed up once with the
    /// discounted reward accumulated over the hold.
    EpisodeResult run_episode(const VehicleState& x0, QTable& q, double eps, Rng& rng, bool learn,
                              BackupAudit* audit = nullptr, int horizon = -1) const {
        const auto& grid = model_->grid();
        const auto& actions = model_->actions();
        const int n_max = horizon > 0 ? horizon : learner_.horizon;

        EpisodeResult res;
        res.terminal = x0;
        if (!x0.finite() || !within_grid_guard(x0, grid, shield_.guard_bins) ||
            (shield_.enabled && !viability_->is_feasible(project(x0, grid).id))) {
            res.cause = Termination::guard;
            return res;
        }

        struct Pending {
            StateId s = 0;
            ActionId a = 0;
            ActionMask mask;
            double ret = 0.0;
            double weight = 1.0;
            int held = 0;
        } dec;
        auto rate = [&]() {
            if (!learner_.count_rate) return learner_.learn_rate;
            return std::max(learner_.learn_rate, 1.0 / (1.0 + q.visits(dec.s, dec.a)));
        };
        auto backup_to = [&](StateId s_next) {
            const ActionMask mask_next =
                shield_.enabled ? viability_->admissible_mask(s_next) : ActionMask::all(actions.size());
            if (learner_.bootstrap_tried) {
                const ActionMask t = q.tried(s_next, mask_next);
                if (t.empty()) {
                    q_update_terminal(q, dec.s, dec.a, dec.ret + dec.weight * learner_.unknown_value, dec.mask,
                                      rate());
                    if (audit) ++audit->backups;
                } else {
                    q_update(q, dec.s, dec.a, dec.ret, s_next, dec.mask, t, rate(), dec.weight, audit,
                             &mask_next);
                }
            } else {
                q_update(q, dec.s, dec.a, dec.ret, s_next, dec.mask, mask_next, rate(), dec.weight,
                         audit, &mask_next);
            }
            if (audit && shield_.enabled) audit_against_viability(s_next, mask_next, *audit);
        };
        auto backup_terminal = [&](double value) {
            q_update_terminal(q, dec.s, dec.a, dec.ret + dec.weight * value, dec.mask, rate());
        };

        VehicleState x = x0;
        ActionId a_prev = 0;
        for (int k = 0; k < n_max; ++k) {
            const StateId s = project(x, grid).id;
            const Mode mode = mode_unchecked(s);
            const bool decide = k == 0 || s != dec.s || dec.held >= learner_.max_hold;

            StepRecord rec;
            ActionId a = dec.a;
            if (decide) {
                if (k > 0 && learn) backup_to(s);
                bool overridden = false;
                const ActionMask mask = selection_mask(x, s, &overridden);
                LocalSelection local{mask, 0, false};
                if (k > 0) local = local_admissible(actions, mask, a_prev, learner_.r_max);
                a = select_action(q, s, local.actions, eps, rng);
                dec = Pending{s, a, shield_.enabled ? viability_->admissible_mask(s) : mask, 0.0, 1.0, 0};
                rec.mask_size = mask.size();
                rec.radius = local.radius;
                rec.fallback = local.fallback;
                res.fallbacks += local.fallback ? 1 : 0;
                res.online_overrides += overridden ? 1 : 0;
            } else {
                rec.mask_size = dec.mask.size();
            }
            const ActionId a_sw = (k == 0) ? a : a_prev;
            const ControlInput u = actions.control(a);

            rec.t = k * model_->dt();
            rec.x = x;
            rec.action = a;
            rec.u = u;
            rec.mode = mode;
            rec.distance = box_distance(x, box_);
            rec.in_mask = !shield_.enabled || viability_->admissible_mask(s).contains(a);

            VehicleState next;
            bool integrated = true;
            try {
                next = model_->dynamics().rk2_step(x, u, model_->dt());
            } catch (const IntegrationError&) {
                integrated = false;
            }
            if (!integrated) {
                res.steps.push_back(rec);
                res.cause = Termination::guard;
                res.terminal = x;
                return res;
            }

            rec.flags = eval_constraints(model_->dynamics().model(), limits_, next, u);
            rec.reward = reward(actions, box_, rewards_, x, a, a_sw, next, mode);
            res.total_reward += rec.reward;
            (mode == Mode::safe ? res.safe_steps : res.unsafe_steps) += 1;
            res.steps.push_back(rec);
            res.terminal = next;
            dec.ret += dec.weight * rec.reward;
            dec.weight *= learner_.discount;
            ++dec.held;

            if (rec.flags.hard_any()) {
                res.hard_violations = 1;
                res.cause = Termination::hard_violation;
                if (learn) backup_terminal(learner_.violation_value);
                return res;
            }
            const StateId s_next = project(next, grid).id;
            const bool next_ok = within_grid_guard(next, grid, shield_.guard_bins) &&
                                 (!shield_.enabled || viability_->is_feasible(s_next));
            if (!next_ok) {
                res.cause = Termination::guard;
                if (learn) backup_terminal(learner_.guard_value);
                return res;
            }
            x = next;
            a_prev = a;
        }
        if (learn) backup_to(project(x, grid).id);
        res.cause = Termination::horizon;
        return res;
    }

    /// Next episode start: the previous terminal state, unless the episode ended in a
    /// hard violation or the terminal state cannot seed an episode.
    [[nodiscard]] VehicleState chained_start(const EpisodeResult& prev, const VehicleState& nominal,
                                             bool* reset = nullptr) const {
        bool use_nominal = prev.cause == Termination::hard_violation || !valid_start(prev.terminal);
        if (reset) *reset = use_nominal;
        return use_nominal ? nominal : prev.terminal;
    }

    [[nodiscard]] bool valid_start(const VehicleState& x) const {
        if (!x.finite() || !within_grid_guard(x, model_->grid(), shield_.guard_bins)) return false;
        return !shield_.enabled || viability_->is_feasible(project(x, model_->grid()).id);
    }

    /// Chained training from `first`; hard violations reset to `nominal`.
    TrainingResult train(const VehicleState& nominal) const { return train(nominal, nominal); }
    TrainingResult train(const VehicleState& nominal, const VehicleState& first) const {
        TrainingResult out{make_table(), {}, {}};
        Rng rng(learner_.seed);
        VehicleState x0 = first;
        bool reset = false;
        for (int e = 0; e < learner_.episodes; ++e) {
            const double eps = learner_.epsilon(e);
            const auto ep = run_episode(x0, out.q, eps, rng, true, &out.audit);
            EpisodeLog log;
            log.episode = e;
            log.start = x0;
            log.terminal = ep.terminal;
            log.steps = static_cast<int>(ep.steps.size());
            log.cause = ep.cause;
            log.total_reward = ep.total_reward;
            log.hard_violations = ep.hard_violations;
            log.safe_steps = ep.safe_steps;
            log.unsafe_steps = ep.unsafe_steps;
            log.fallbacks = ep.fallbacks;
            log.epsilon = eps;
            log.reset_to_nominal = reset;
            out.episodes.push_back(log);
            x0 = chained_start(ep, nominal, &reset);
            if (learner_.scatter_guard_resets && ep.cause == Termination::guard && !feasible_.empty())
                x0 = representative(feasible_[rng.below(feasible_.size())], model_->grid());
        }
        return out;
    }

    [[nodiscard]] const ShieldModel& model() const { return *model_; }
    [[nodiscard]] const ViabilityResult& viability() const { return *viability_; }
    [[nodiscard]] const SafetyBox& box() const { return box_; }
    [[nodiscard]] const RewardConfig& rewards() const { return rewards_; }
    [[nodiscard]] const LearnerConfig& learner() const { return learner_; }
    [[nodiscard]] const ShieldOptions& shield() const { return shield_; }
    [[nodiscard]] const ConstraintSet& limits() const { return limits_; }

private:
    [[nodiscard]] Mode mode_unchecked(StateId s) const {
        return in_safety_box(representative(s, model_->grid()), box_) ? Mode::safe : Mode::unsafe;
    }

    void audit_against_viability(StateId s_next, ActionMask used, BackupAudit& audit) const {
        const ActionMask truth = viability_->admissible_mask(s_next);
        audit.inadmissible_reads += static_cast<std::uint64_t>((used & ActionMask(~truth.bits())).size());
    }

    const ShieldModel* model_;
    const ViabilityResult* viability_;
    ConstraintSet limits_;
    SafetyBox box_;
    RewardConfig rewards_;
    LearnerConfig learner_;
    ShieldOptions shield_;
    std::vector<StateId> feasible_;
};

} // namespace hyshield
