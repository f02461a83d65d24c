#pragma once

// Altitude-dependent gravity and a piecewise standard atmosphere (US 1976
// layer structure, geometric altitude, 0 to 86 km).

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyshield/errors.hpp"

namespace hyshield {

struct GravityConstants {
    double g0 = 9.80665;          ///< standard gravity [m/s^2]
    double earth_radius = 6.371e6; ///< [m]
};

/// Inverse-square gravity; negative altitudes are treated as sea level.
inline double gravity(double h, const GravityConstants& c = {}) {
    detail::require_finite(h, "altitude");
    const double r = c.earth_radius / (c.earth_radius + std::max(0.0, h));
    return c.g0 * r * r;
}

struct AtmosphereLayer {
    double h_base; ///< [m]
    double T_base; ///< [K]
    double p_base; ///< [Pa]
    double lapse;  ///< dT/dh [K/m]
};

struct AtmosphereConstants {
    double R_air = 287.05287;  ///< [J/(kg K)]
    double gamma_air = 1.4;
    double h_min = 0.0;
    double h_max = 86000.0;
};

struct AtmosphereSample {
    double T;   ///< [K]
    double p;   ///< [Pa]
    double rho; ///< [kg/m^3]
    double a;   ///< [m/s]
};

struct FlightCondition {
    double mach;
    double dynamic_pressure; ///< [Pa]
};

class StandardAtmosphere {
public:
    struct LayerSeed {
        double h_base;
        double lapse;
    };

    /// Builds the layer table; upper-layer base temperature and pressure are
    /// propagated from the layer below so p(h) is continuous at every base.
    StandardAtmosphere(std::span<const LayerSeed> seeds, double T0, double p0,
                       AtmosphereConstants constants = {}, double g0 = GravityConstants{}.g0)
        : constants_(constants), g0_(g0) {
        if (seeds.empty()) throw std::invalid_argument("atmosphere needs at least one layer");
        if (!(T0 > 0.0) || !(p0 > 0.0)) throw std::invalid_argument("sea-level T and p must be positive");
        double T = T0;
        double p = p0;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (i > 0 && !(seeds[i].h_base > seeds[i - 1].h_base))
                throw std::invalid_argument("atmosphere layers must have increasing base altitude");
            layers_.push_back({seeds[i].h_base, T, p, seeds[i].lapse});
            if (i + 1 < seeds.size()) {
                const auto top = evaluate_in(layers_.back(), seeds[i + 1].h_base);
                T = top.first;
                p = top.second;
            }
        }
    }

    static const StandardAtmosphere& us1976() {
        static const std::array<LayerSeed, 7> seeds{{
            {0.0, -6.5e-3},
            {11000.0, 0.0},
            {20000.0, 1.0e-3},
            {32000.0, 2.8e-3},
            {47000.0, 0.0},
            {51000.0, -2.8e-3},
            {71000.0, -2.0e-3},
        }};
        static const StandardAtmosphere instance(seeds, 288.15, 101325.0);
        return instance;
    }

    [[nodiscard]] AtmosphereSample sample(double h) const {
        detail::require_finite(h, "altitude");
        const double hc = std::clamp(h, constants_.h_min, constants_.h_max);
        const auto& layer = layer_for(hc);
        const auto [T, p] = evaluate_in(layer, hc);
        return {T, p, p / (constants_.R_air * T), std::sqrt(constants_.gamma_air * constants_.R_air * T)};
    }

    [[nodiscard]] FlightCondition flight_condition(double h, double V) const {
        detail::require_finite(V, "speed");
        if (V < 0.0) throw InputError("speed must be non-negative");
        const auto s = sample(h);
        return {V / s.a, 0.5 * s.rho * V * V};
    }

    [[nodiscard]] std::span<const AtmosphereLayer> layers() const { return layers_; }
    [[nodiscard]] const AtmosphereConstants& constants() const { return constants_; }

    /// Pressure just below a layer base, evaluated with the lower layer's formula.
    [[nodiscard]] double pressure_below(std::size_t layer_index) const {
        if (layer_index == 0 || layer_index >= layers_.size()) throw std::out_of_range("layer index");
        return evaluate_in(layers_[layer_index - 1], layers_[layer_index].h_base).second;
    }

private:
    [[nodiscard]] const AtmosphereLayer& layer_for(double h) const {
        auto it = std::upper_bound(layers_.begin(), layers_.end(), h,
                                   [](double v, const AtmosphereLayer& l) { return v < l.h_base; });
        return it == layers_.begin() ? layers_.front() : *std::prev(it);
    }

    [[nodiscard]] std::pair<double, double> evaluate_in(const AtmosphereLayer& l, double h) const {
        const double dh = h - l.h_base;
        if (l.lapse != 0.0) {
            const double T = l.T_base + l.lapse * dh;
            return {T, l.p_base * std::pow(T / l.T_base, -g0_ / (constants_.R_air * l.lapse))};
        }
        return {l.T_base, l.p_base * std::exp(-g0_ * dh / (constants_.R_air * l.T_base))};
    }

    std::vector<AtmosphereLayer> layers_;
    AtmosphereConstants constants_;
    double g0_;
};

inline AtmosphereSample atmosphere(double h) { return StandardAtmosphere::us1976().sample(h); }

inline FlightCondition flight_condition(double h, double V) {
    return StandardAtmosphere::us1976().flight_condition(h, V);
}

} // namespace hyshield
