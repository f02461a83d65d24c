#pragma once

// Builds the model stack from an ExperimentConfig and fingerprints it.

#include <cstdint>
#include <memory>
#include <string>

#include "hyshield/config.hpp"
#include "hyshield/qlearning.hpp"
#include "hyshield/tables.hpp"
#include "hyshield/viability.hpp"

namespace hyshield {

/// FNV-1a over the canonical dump of every key in `scope` (training includes
/// viability) plus the table contents.
inline std::uint64_t fingerprint(const ExperimentConfig& c, const ModelTables& t, KeyScope scope) {
    std::string text;
    for (const auto& k : config_keys()) {
        if (k.name == "vehicle.tables") continue; // the contents count, not the path
        if (k.scope == KeyScope::viability || (scope == KeyScope::training && k.scope == KeyScope::training))
            text += k.name + "=" + k.get(c) + "\n";
    }
    text += tables_to_json(t).dump();
    return detail::fnv1a(text);
}

struct RecoveryReport {
    int first_inside = -1;      ///< first step whose state lies in the box, -1 if never
    bool remains_inside = false;
    double reward_first = 0.0;  ///< summed reward of the first `window` steps
    double reward_last = 0.0;   ///< summed reward of the last `window` steps
    bool full_length = false;

    [[nodiscard]] bool passed() const {
        return full_length && first_inside >= 0 && remains_inside && reward_last > reward_first;
    }
};

/// Box entry and retention along a rollout, judged on the continuous states.
inline RecoveryReport assess_recovery(const EpisodeResult& ep, const SafetyBox& box, int steps, int window = 50) {
    RecoveryReport r;
    const auto n = static_cast<int>(ep.steps.size());
    r.full_length = n == steps && ep.cause == Termination::horizon;
    for (int k = 0; k < n; ++k)
        if (in_safety_box(ep.steps[k].x, box)) {
            r.first_inside = k;
            break;
        }
    if (r.first_inside >= 0) {
        r.remains_inside = in_safety_box(ep.terminal, box);
        for (int k = r.first_inside; k < n && r.remains_inside; ++k) r.remains_inside = in_safety_box(ep.steps[k].x, box);
    }
    for (int k = 0; k < std::min(window, n); ++k) r.reward_first += ep.steps[k].reward;
    for (int k = std::max(0, n - window); k < n; ++k) r.reward_last += ep.steps[k].reward;
    return r;
}

class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg) : Experiment(cfg, load_tables(cfg.tables)) {}

    Experiment(ExperimentConfig cfg, ModelTables tables)
        : cfg_((validate(cfg), std::move(cfg))), tables_(std::move(tables)),
          shield_model_(VehicleDynamics(AeroPropulsionModel(tables_.aero, tables_.propulsion, cfg_.vehicle), cfg_.dry_mass),
                        cfg_.limits.hard, cfg_.grid, cfg_.actions, cfg_.dt, cfg_.hold_steps, cfg_.hull_exit_unsafe,
                        cfg_.cellwise) {}

    [[nodiscard]] ViabilityResult compute_viability(SweepOrder order = SweepOrder::jacobi) const {
        auto r = shield_model_.compute(order);
        r.set_fingerprint(viability_fingerprint());
        return r;
    }

    /// Learner bound to `v`, which must stay alive as long as the learner.
    [[nodiscard]] ShieldedLearner learner(const ViabilityResult& v) const {
        if (v.fingerprint() != viability_fingerprint())
            throw ArtifactMismatch("viability artifact was computed for a different configuration");
        return ShieldedLearner(shield_model_, v, cfg_.limits, cfg_.box, cfg_.rewards, cfg_.learner, cfg_.shield);
    }

    [[nodiscard]] std::uint64_t viability_fingerprint() const { return fingerprint(cfg_, tables_, KeyScope::viability); }
    [[nodiscard]] std::uint64_t training_fingerprint() const { return fingerprint(cfg_, tables_, KeyScope::training); }

    [[nodiscard]] const ExperimentConfig& config() const { return cfg_; }
    [[nodiscard]] const ModelTables& tables() const { return tables_; }
    [[nodiscard]] const ShieldModel& shield_model() const { return shield_model_; }

private:
    ExperimentConfig cfg_;
    ModelTables tables_;
    ShieldModel shield_model_;
};

} // namespace hyshield
