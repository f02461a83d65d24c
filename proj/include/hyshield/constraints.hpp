#pragma once

// Soft/hard envelope constraints, violation flags and the safety box.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "hyshield/aero_propulsion.hpp"
#include "hyshield/vehicle.hpp"

namespace hyshield {

struct SoftLimits {
    double h_min = 19000.0;
    double h_max = 51000.0;
    double V_min = 900.0;
    double V_max = 4100.0;
    double gamma_min = deg2rad(-10.0);
    double gamma_max = deg2rad(10.0);
};

struct HardLimits {
    double q_max = 80000.0;   ///< [Pa]
    double n_max = 5.0;       ///< [g]
    double qdot_max = 5.0e4;  ///< heating proxy units
    double mach_min = 4.0;
    double mach_max = 15.0;

    static HardLimits unbounded() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, inf, -inf, inf};
    }
};

struct ConstraintSet {
    SoftLimits soft;
    HardLimits hard;
};

struct SafetyBox {
    double h_star = 35000.0;
    double V_star = 2500.0;
    double gamma_star = 0.0;
    double dh = 8000.0;
    double dV = 800.0;
    double dgamma = deg2rad(5.0);
};

inline constexpr std::size_t kNumConstraints = 11;
inline constexpr std::size_t kNumSoftConstraints = 6;

/// Flags v[j] = 1{c_{j+1} > 0}. Indices 0..5 are soft (h, V, gamma bounds),
/// 6..10 hard: dynamic pressure, load factor, heating, Mach max, Mach min.
struct ViolationVector {
    std::array<bool, kNumConstraints> v{};

    [[nodiscard]] bool soft_any() const {
        for (std::size_t j = 0; j < kNumSoftConstraints; ++j)
            if (v[j]) return true;
        return false;
    }
    [[nodiscard]] bool hard_any() const {
        for (std::size_t j = kNumSoftConstraints; j < kNumConstraints; ++j)
            if (v[j]) return true;
        return false;
    }
    [[nodiscard]] std::size_t count() const {
        std::size_t n = 0;
        for (bool b : v) n += b ? 1 : 0;
        return n;
    }
};

inline double load_factor(const AeroPropulsionModel& model, const VehicleState& x, double alpha) {
    if (!(x.m > 0.0)) throw InputError("vehicle mass must be positive");
    const double lift = model.aero_forces(x.h, x.V, alpha).lift;
    return lift / (x.m * gravity(x.h, model.gravity_constants()));
}

/// Raw constraint values c_1..c_11; c_j <= 0 means satisfied.
inline std::array<double, kNumConstraints> constraint_values(const AeroPropulsionModel& model,
                                                             const ConstraintSet& limits, const VehicleState& x,
                                                             const ControlInput& u) {
    const auto& s = limits.soft;
    const auto& hl = limits.hard;
    const auto fc = model.atmosphere().flight_condition(x.h, x.V);
    return {
        s.h_min - x.h,
        x.h - s.h_max,
        s.V_min - x.V,
        x.V - s.V_max,
        s.gamma_min - x.gamma,
        x.gamma - s.gamma_max,
        fc.dynamic_pressure - hl.q_max,
        std::abs(load_factor(model, x, u.alpha)) - hl.n_max,
        model.heating_rate(x.h, x.V) - hl.qdot_max,
        fc.mach - hl.mach_max,
        hl.mach_min - fc.mach,
    };
}

inline ViolationVector eval_constraints(const AeroPropulsionModel& model, const ConstraintSet& limits,
                                        const VehicleState& x, const ControlInput& u) {
    const auto c = constraint_values(model, limits, x, u);
    ViolationVector out;
    for (std::size_t j = 0; j < kNumConstraints; ++j) out.v[j] = c[j] > 0.0;
    return out;
}

/// True when every hard constraint holds; cheaper than a full flag vector.
inline bool hard_constraints_hold(const AeroPropulsionModel& model, const HardLimits& hl, const VehicleState& x,
                                  const ControlInput& u) {
    const auto fc = model.atmosphere().flight_condition(x.h, x.V);
    if (fc.dynamic_pressure > hl.q_max) return false;
    if (fc.mach > hl.mach_max || fc.mach < hl.mach_min) return false;
    if (model.heating_rate(x.h, x.V) > hl.qdot_max) return false;
    return std::abs(load_factor(model, x, u.alpha)) <= hl.n_max;
}

inline bool in_safety_box(const VehicleState& x, const SafetyBox& box) {
    return std::abs(x.h - box.h_star) <= box.dh && std::abs(x.V - box.V_star) <= box.dV &&
           std::abs(x.gamma - box.gamma_star) <= box.dgamma;
}

/// Normalized Euclidean distance from the box center (1 on a face midpoint).
inline double box_distance(const VehicleState& x, const SafetyBox& box) {
    const double eh = (x.h - box.h_star) / box.dh;
    const double eV = (x.V - box.V_star) / box.dV;
    const double eg = (x.gamma - box.gamma_star) / box.dgamma;
    return std::sqrt(eh * eh + eV * eV + eg * eg);
}

} // namespace hyshield
