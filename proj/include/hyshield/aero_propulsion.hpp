#pragma once

// Mach-scheduled aerodynamics, heating proxy and tabulated propulsion.

#include <cmath>
#include <numbers>
#include <vector>

#include "hyshield/atmosphere.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/interpolation.hpp"

namespace hyshield {

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct AeroCoeffRow {
    double mach;
    double CL0;
    double CLalpha;  ///< [1/rad]
    double CD0;
    double K;
    double CDalpha2; ///< [1/rad^2]
};

/// Mach schedule of the lift curve and drag polar.
struct AeroTable {
    std::vector<AeroCoeffRow> rows;

    static AeroTable defaults() {
        return {{
            {3.0, 0.0, 2.8, 0.030, 0.120, 0.80},
            {5.0, 0.0, 2.6, 0.035, 0.110, 0.85},
            {7.0, 0.0, 2.4, 0.040, 0.100, 0.90},
            {10.0, 0.0, 2.2, 0.050, 0.095, 0.95},
            {12.0, 0.0, 2.1, 0.055, 0.090, 1.00},
            {15.0, 0.0, 2.0, 0.065, 0.085, 1.05},
        }};
    }

    void validate() const {
        std::vector<double> grid;
        for (const auto& r : rows) grid.push_back(r.mach);
        detail::check_grid(grid, "aero Mach grid");
        for (const auto& r : rows)
            if (!(r.CD0 > 0.0)) throw std::invalid_argument("aero table: CD0 must be positive");
    }

    /// Row interpolated linearly in Mach, Mach clamped to the table range.
    [[nodiscard]] AeroCoeffRow at_mach(double M) const {
        const double Mc = std::clamp(M, rows.front().mach, rows.back().mach);
        std::size_t i = 0;
        while (i + 2 < rows.size() && Mc >= rows[i + 1].mach) ++i;
        const auto& a = rows[i];
        const auto& b = rows[i + 1];
        const double t = (Mc - a.mach) / (b.mach - a.mach);
        auto mix = [t](double x, double y) { return x * (1.0 - t) + y * t; };
        return {Mc, mix(a.CL0, b.CL0), mix(a.CLalpha, b.CLalpha), mix(a.CD0, b.CD0), mix(a.K, b.K),
                mix(a.CDalpha2, b.CDalpha2)};
    }
};

struct PropulsionMaps {
    LookupTable2d<double> thrust_max_kN; ///< rows: altitude [m], cols: Mach
    LookupTable2d<double> isp_s;
    double mach_gate_min = 4.0;
    double mach_gate_max = 15.0;

    static PropulsionMaps defaults() {
        std::vector<double> h{20000.0, 30000.0, 40000.0, 50000.0, 60000.0};
        std::vector<double> M{3.0, 5.0, 7.0, 10.0, 12.0, 15.0};
        std::vector<double> tmax{
            80, 120, 160, 140, 120, 80,  //
            90, 140, 190, 170, 140, 90,  //
            80, 130, 180, 160, 130, 80,  //
            60, 100, 140, 120, 100, 60,  //
            30, 60,  90,  75,  60,  30,
        };
        std::vector<double> isp{
            900, 1100, 1400, 1500, 1450, 1200, //
            950, 1200, 1500, 1650, 1600, 1300, //
            900, 1150, 1450, 1600, 1550, 1250, //
            800, 1000, 1250, 1400, 1350, 1100, //
            650, 800,  1000, 1150, 1100, 900,
        };
        return {LookupTable2d<double>(h, M, std::move(tmax)), LookupTable2d<double>(h, M, std::move(isp))};
    }
};

struct VehicleParams {
    double ref_area = 30.0; ///< S [m^2]
    double k_heat = 1e-5;
    double alpha_min = deg2rad(-5.0);
    double alpha_max = deg2rad(15.0);
};

struct AeroCoefficients {
    double CL;
    double CD;
};

struct AeroForces {
    double lift; ///< [N]
    double drag; ///< [N]
};

/// Immutable bundle of the aerodynamic and propulsion data used by the dynamics.
class AeroPropulsionModel {
public:
    AeroPropulsionModel() : AeroPropulsionModel(AeroTable::defaults(), PropulsionMaps::defaults(), {}) {}

    AeroPropulsionModel(AeroTable aero, PropulsionMaps prop, VehicleParams params,
                        const StandardAtmosphere& atm = StandardAtmosphere::us1976(), GravityConstants grav = {})
        : aero_(std::move(aero)), prop_(std::move(prop)), params_(params), atm_(&atm), grav_(grav) {
        aero_.validate();
        if (!(params_.ref_area > 0.0) || !(params_.k_heat > 0.0) || !(params_.alpha_min < params_.alpha_max))
            throw std::invalid_argument("invalid vehicle parameters");
    }

    [[nodiscard]] AeroCoefficients aero_coeffs(double M, double alpha) const {
        detail::require_finite(alpha, "angle of attack");
        if (alpha < params_.alpha_min || alpha > params_.alpha_max)
            throw InputError("angle of attack outside [alpha_min, alpha_max]");
        const auto c = aero_.at_mach(M);
        const double CL = c.CL0 + c.CLalpha * alpha;
        return {CL, c.CD0 + c.K * CL * CL + c.CDalpha2 * alpha * alpha};
    }

    [[nodiscard]] AeroForces aero_forces(double h, double V, double alpha) const {
        const auto fc = atm_->flight_condition(h, V);
        const auto c = aero_coeffs(fc.mach, alpha);
        const double qS = fc.dynamic_pressure * params_.ref_area;
        return {qS * c.CL, qS * c.CD};
    }

    [[nodiscard]] double heating_rate(double h, double V) const {
        return heating_rate_from_density(atm_->sample(h).rho, V, params_.k_heat);
    }

    static double heating_rate_from_density(double rho, double V, double k_heat) {
        return k_heat * std::sqrt(std::max(rho, 0.0)) * V * V * V;
    }

    /// Maximum thrust [N], zero outside the propulsion Mach gate.
    [[nodiscard]] double thrust_max(double h, double M) const {
        if (M < prop_.mach_gate_min || M > prop_.mach_gate_max) return 0.0;
        return 1000.0 * prop_.thrust_max_kN(h, M);
    }

    [[nodiscard]] double thrust_at_mach(double h, double M, double delta) const {
        detail::require_finite(delta, "throttle");
        if (delta < 0.0 || delta > 1.0) throw InputError("throttle outside [0, 1]");
        return delta * thrust_max(h, M);
    }

    [[nodiscard]] double thrust(double h, double V, double delta) const {
        return thrust_at_mach(h, atm_->flight_condition(h, V).mach, delta);
    }

    [[nodiscard]] double specific_impulse(double h, double M) const { return prop_.isp_s(h, M); }

    /// Propellant mass flow [kg/s]; the vehicle mass rate is its negative.
    [[nodiscard]] double fuel_flow(double T, double h, double M) const {
        if (T < 0.0) throw InputError("thrust must be non-negative");
        if (T == 0.0) return 0.0;
        return T / (specific_impulse(h, M) * grav_.g0);
    }

    [[nodiscard]] const AeroTable& aero_table() const { return aero_; }
    [[nodiscard]] const PropulsionMaps& propulsion() const { return prop_; }
    [[nodiscard]] const VehicleParams& params() const { return params_; }
    [[nodiscard]] const StandardAtmosphere& atmosphere() const { return *atm_; }
    [[nodiscard]] const GravityConstants& gravity_constants() const { return grav_; }

private:
    AeroTable aero_;
    PropulsionMaps prop_;
    VehicleParams params_;
    const StandardAtmosphere* atm_;
    GravityConstants grav_;
};

} // namespace hyshield
