#pragma once

// Flat "section.key = value" configuration with every default embedded, a
// canonical dump and FNV-1a fingerprints over the parts each artifact depends on.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hyshield/abstraction.hpp"
#include "hyshield/actions.hpp"
#include "hyshield/aero_propulsion.hpp"
#include "hyshield/constraints.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/qlearning.hpp"
#include "hyshield/vehicle.hpp"
#include "hyshield/viability.hpp"

namespace hyshield {

struct ExperimentConfig {
    GridSpec grid{{{
        {19000.0, 51000.0, 16},
        {900.0, 4100.0, 20},
        {deg2rad(-10.0), deg2rad(10.0), 16},
        {6000.0, 12000.0, 2},
    }}};
    ConstraintSet limits;
    SafetyBox box;
    RewardConfig rewards;
    LearnerConfig learner = default_learner();
    ShieldOptions shield = default_shield();
    ActionGrid actions;
    VehicleParams vehicle = default_vehicle();
    double dry_mass = 6000.0;
    double dt = 0.5;
    int hold_steps = 20;
    bool cellwise = true;
    bool hull_exit_unsafe = false;
    std::string tables; ///< JSON table file; empty selects the built-in tables
    VehicleState nominal{35000.0, 2500.0, 0.0, 12000.0};
    VehicleState x0{35000.0, 2500.0, deg2rad(7.0), 12000.0};
    int rollout_steps = 400;

    static LearnerConfig default_learner() {
        LearnerConfig l;
        l.guard_value = -20000.0;
        l.violation_value = -20000.0;
        l.max_hold = 20;
        l.bootstrap_tried = true;
        l.unknown_value = -10000.0;
        l.count_rate = true;
        return l;
    }
    static ShieldOptions default_shield() {
        ShieldOptions s;
        s.online_check = true;
        return s;
    }
    static VehicleParams default_vehicle() {
        VehicleParams v;
        v.ref_area = 20.0;
        return v;
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config: '" + key + "' expects a comma-separated list");
    return out;
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_double(v[i]);
    }
    return out;
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

/// Which artifact a key feeds into.
enum class KeyScope : std::uint8_t { viability, training, run };

struct ConfigKey {
    std::string name;
    KeyScope scope;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

namespace detail {

template <typename Ref>
void add_num(std::vector<ConfigKey>& keys, std::string name, KeyScope scope, Ref ref, double scale = 1.0) {
    keys.push_back({name, scope,
                    [ref, scale](const ExperimentConfig& c) {
                        const double v = ref(const_cast<ExperimentConfig&>(c));
                        if (scale == 1.0) return fmt_double(v);
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.15g", v / scale);
                        return std::string(buf);
                    },
                    [ref, scale, name](ExperimentConfig& c, const std::string& v) {
                        ref(c) = parse_double(name, v) * scale;
                    }});
}

template <typename Ref>
void add_int(std::vector<ConfigKey>& keys, std::string name, KeyScope scope, Ref ref) {
    keys.push_back({name, scope,
                    [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); },
                    [ref, name](ExperimentConfig& c, const std::string& v) {
                        using T = std::remove_reference_t<decltype(ref(c))>;
                        const long long n = parse_int(name, v);
                        if constexpr (std::is_unsigned_v<T>)
                            if (n < 0) throw ConfigError("config: '" + name + "' must be non-negative");
                        ref(c) = static_cast<T>(n);
                    }});
}

template <typename Ref>
void add_bool(std::vector<ConfigKey>& keys, std::string name, KeyScope scope, Ref ref) {
    keys.push_back({name, scope,
                    [ref](const ExperimentConfig& c) {
                        return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
                    },
                    [ref, name](ExperimentConfig& c, const std::string& v) { ref(c) = parse_bool(name, v); }});
}

} // namespace detail

/// Every recognised key, in canonical order. Angles are in degrees on the file side.
inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        using detail::add_bool;
        using detail::add_int;
        using detail::add_num;
        using C = ExperimentConfig;
        constexpr auto V = KeyScope::viability;
        constexpr auto T = KeyScope::training;
        constexpr auto R = KeyScope::run;
        const double deg = deg2rad(1.0);
        std::vector<ConfigKey> k;

        const char* axes[] = {"h", "V", "gamma", "m"};
        for (std::size_t d = 0; d < kStateDims; ++d) {
            const std::string p = std::string("grid.") + axes[d];
            const double s = d == 2 ? deg : 1.0;
            const std::string u = d == 2 ? "_deg" : "";
            add_num(k, p + ".lo" + u, V, [d](C& c) -> double& { return c.grid.axes[d].lo; }, s);
            add_num(k, p + ".hi" + u, V, [d](C& c) -> double& { return c.grid.axes[d].hi; }, s);
            add_int(k, p + ".bins", V, [d](C& c) -> int& { return c.grid.axes[d].bins; });
        }

        k.push_back({"actions.alpha_deg", V, [](const C& c) { return detail::fmt_list(c.actions.alpha_deg); },
                     [](C& c, const std::string& v) { c.actions.alpha_deg = detail::parse_list("actions.alpha_deg", v); }});
        k.push_back({"actions.delta", V, [](const C& c) { return detail::fmt_list(c.actions.delta); },
                     [](C& c, const std::string& v) { c.actions.delta = detail::parse_list("actions.delta", v); }});

        add_num(k, "integrator.dt", V, [](C& c) -> double& { return c.dt; });

        add_num(k, "vehicle.ref_area", V, [](C& c) -> double& { return c.vehicle.ref_area; });
        add_num(k, "vehicle.k_heat", V, [](C& c) -> double& { return c.vehicle.k_heat; });
        add_num(k, "vehicle.alpha_min_deg", V, [](C& c) -> double& { return c.vehicle.alpha_min; }, deg);
        add_num(k, "vehicle.alpha_max_deg", V, [](C& c) -> double& { return c.vehicle.alpha_max; }, deg);
        add_num(k, "vehicle.dry_mass", V, [](C& c) -> double& { return c.dry_mass; });
        k.push_back({"vehicle.tables", V, [](const C& c) { return c.tables; },
                     [](C& c, const std::string& v) { c.tables = v; }});

        add_num(k, "limits.hard.q_max", V, [](C& c) -> double& { return c.limits.hard.q_max; });
        add_num(k, "limits.hard.n_max", V, [](C& c) -> double& { return c.limits.hard.n_max; });
        add_num(k, "limits.hard.qdot_max", V, [](C& c) -> double& { return c.limits.hard.qdot_max; });
        add_num(k, "limits.hard.mach_min", V, [](C& c) -> double& { return c.limits.hard.mach_min; });
        add_num(k, "limits.hard.mach_max", V, [](C& c) -> double& { return c.limits.hard.mach_max; });

        add_int(k, "shield.hold_steps", V, [](C& c) -> int& { return c.hold_steps; });
        add_bool(k, "shield.cellwise", V, [](C& c) -> bool& { return c.cellwise; });
        add_bool(k, "shield.hull_exit_unsafe", V, [](C& c) -> bool& { return c.hull_exit_unsafe; });
        add_bool(k, "shield.enabled", T, [](C& c) -> bool& { return c.shield.enabled; });
        add_bool(k, "shield.online_check", T, [](C& c) -> bool& { return c.shield.online_check; });
        add_num(k, "shield.guard_bins", T, [](C& c) -> double& { return c.shield.guard_bins; });

        add_num(k, "limits.soft.h_min", T, [](C& c) -> double& { return c.limits.soft.h_min; });
        add_num(k, "limits.soft.h_max", T, [](C& c) -> double& { return c.limits.soft.h_max; });
        add_num(k, "limits.soft.V_min", T, [](C& c) -> double& { return c.limits.soft.V_min; });
        add_num(k, "limits.soft.V_max", T, [](C& c) -> double& { return c.limits.soft.V_max; });
        add_num(k, "limits.soft.gamma_min_deg", T, [](C& c) -> double& { return c.limits.soft.gamma_min; }, deg);
        add_num(k, "limits.soft.gamma_max_deg", T, [](C& c) -> double& { return c.limits.soft.gamma_max; }, deg);

        add_num(k, "box.h_star", T, [](C& c) -> double& { return c.box.h_star; });
        add_num(k, "box.V_star", T, [](C& c) -> double& { return c.box.V_star; });
        add_num(k, "box.gamma_star_deg", T, [](C& c) -> double& { return c.box.gamma_star; }, deg);
        add_num(k, "box.dh", T, [](C& c) -> double& { return c.box.dh; });
        add_num(k, "box.dV", T, [](C& c) -> double& { return c.box.dV; });
        add_num(k, "box.dgamma_deg", T, [](C& c) -> double& { return c.box.dgamma; }, deg);

        add_num(k, "reward.w_h", T, [](C& c) -> double& { return c.rewards.w_h; });
        add_num(k, "reward.w_V", T, [](C& c) -> double& { return c.rewards.w_V; });
        add_num(k, "reward.w_gamma", T, [](C& c) -> double& { return c.rewards.w_gamma; });
        add_num(k, "reward.w_u", T, [](C& c) -> double& { return c.rewards.w_u; });
        add_num(k, "reward.w_du", T, [](C& c) -> double& { return c.rewards.w_du; });
        add_num(k, "reward.lambda_delta", T, [](C& c) -> double& { return c.rewards.lambda_delta; });
        add_num(k, "reward.c_out", T, [](C& c) -> double& { return c.rewards.c_out; });
        add_num(k, "reward.w_d", T, [](C& c) -> double& { return c.rewards.w_d; });
        add_num(k, "reward.w_imp", T, [](C& c) -> double& { return c.rewards.w_imp; });
        add_num(k, "reward.c_away", T, [](C& c) -> double& { return c.rewards.c_away; });

        add_num(k, "learner.discount", T, [](C& c) -> double& { return c.learner.discount; });
        add_num(k, "learner.learn_rate", T, [](C& c) -> double& { return c.learner.learn_rate; });
        add_bool(k, "learner.count_rate", T, [](C& c) -> bool& { return c.learner.count_rate; });
        add_num(k, "learner.eps_start", T, [](C& c) -> double& { return c.learner.eps_start; });
        add_num(k, "learner.eps_end", T, [](C& c) -> double& { return c.learner.eps_end; });
        add_num(k, "learner.eps_decay", T, [](C& c) -> double& { return c.learner.eps_decay; });
        add_int(k, "learner.r_max", T, [](C& c) -> int& { return c.learner.r_max; });
        add_int(k, "learner.horizon", T, [](C& c) -> int& { return c.learner.horizon; });
        add_int(k, "learner.episodes", T, [](C& c) -> int& { return c.learner.episodes; });
        add_int(k, "learner.max_hold", T, [](C& c) -> int& { return c.learner.max_hold; });
        add_num(k, "learner.q_init", T, [](C& c) -> double& { return c.learner.q_init; });
        add_num(k, "learner.guard_value", T, [](C& c) -> double& { return c.learner.guard_value; });
        add_num(k, "learner.violation_value", T, [](C& c) -> double& { return c.learner.violation_value; });
        add_bool(k, "learner.bootstrap_tried", T, [](C& c) -> bool& { return c.learner.bootstrap_tried; });
        add_num(k, "learner.unknown_value", T, [](C& c) -> double& { return c.learner.unknown_value; });
        add_bool(k, "learner.scatter_guard_resets", T, [](C& c) -> bool& { return c.learner.scatter_guard_resets; });
        add_bool(k, "learner.mode_augmented", T, [](C& c) -> bool& { return c.learner.mode_augmented; });
        add_int(k, "learner.seed", T, [](C& c) -> std::uint64_t& { return c.learner.seed; });

        add_num(k, "nominal.h", T, [](C& c) -> double& { return c.nominal.h; });
        add_num(k, "nominal.V", T, [](C& c) -> double& { return c.nominal.V; });
        add_num(k, "nominal.gamma_deg", T, [](C& c) -> double& { return c.nominal.gamma; }, deg);
        add_num(k, "nominal.m", T, [](C& c) -> double& { return c.nominal.m; });

        add_num(k, "rollout.h", R, [](C& c) -> double& { return c.x0.h; });
        add_num(k, "rollout.V", R, [](C& c) -> double& { return c.x0.V; });
        add_num(k, "rollout.gamma_deg", R, [](C& c) -> double& { return c.x0.gamma; }, deg);
        add_num(k, "rollout.m", R, [](C& c) -> double& { return c.x0.m; });
        add_int(k, "rollout.steps", R, [](C& c) -> int& { return c.rollout_steps; });
        return k;
    }();
    return keys;
}

inline const ConfigKey& find_key(std::string_view name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw ConfigError("config: unknown key '" + std::string(name) + "'");
}

inline void set_value(ExperimentConfig& c, std::string_view key, const std::string& value) {
    find_key(key).set(c, value);
}

/// Range and consistency checks; throws ConfigError.
inline void validate(const ExperimentConfig& c) {
    try {
        c.grid.validate();
        c.actions.validate();
        c.learner.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!(c.dt > 0.0)) throw ConfigError("config: integrator.dt must be positive");
    if (c.hold_steps < 1) throw ConfigError("config: shield.hold_steps must be >= 1");
    if (!(c.dry_mass > 0.0)) throw ConfigError("config: vehicle.dry_mass must be positive");
    if (!(c.vehicle.ref_area > 0.0) || !(c.vehicle.k_heat > 0.0) || !(c.vehicle.alpha_min < c.vehicle.alpha_max))
        throw ConfigError("config: invalid vehicle parameters");
    for (double a : c.actions.alpha_deg)
        if (deg2rad(a) < c.vehicle.alpha_min || deg2rad(a) > c.vehicle.alpha_max)
            throw ConfigError("config: action alpha outside the vehicle alpha range");
    for (double d : c.actions.delta)
        if (d < 0.0 || d > 1.0) throw ConfigError("config: action throttle outside [0, 1]");
    if (!(c.box.dh > 0.0 && c.box.dV > 0.0 && c.box.dgamma > 0.0))
        throw ConfigError("config: box half-widths must be positive");
    if (!(c.shield.guard_bins >= 0.0)) throw ConfigError("config: shield.guard_bins must be >= 0");
    if (c.rollout_steps < 1) throw ConfigError("config: rollout.steps must be >= 1");
    if (!c.nominal.finite() || !c.x0.finite()) throw ConfigError("config: states must be finite");
}

/// Parses "key = value" lines. '#' starts a comment; "[section]" prefixes following keys.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(std::string_view(t).substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        set_value(base, key, detail::trim(std::string_view(t).substr(eq + 1)));
    }
    validate(base);
    return base;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// One "key = value" line per key, in canonical order; parse_config(dump(c)) == c.
inline std::string dump(const ExperimentConfig& c, bool include_run = true) {
    std::string out;
    for (const auto& k : config_keys()) {
        if (!include_run && k.scope == KeyScope::run) continue;
        out += k.name + " = " + k.get(c) + "\n";
    }
    return out;
}

} // namespace hyshield
