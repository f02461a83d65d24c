#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "hyshield/constraints.hpp"
#include "hyshield/vehicle.hpp"

using namespace hyshield;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(Gravity, SeaLevelAndClamp) {
    EXPECT_DOUBLE_EQ(gravity(0.0), 9.80665);
    EXPECT_DOUBLE_EQ(gravity(-100.0), 9.80665);
    EXPECT_NEAR(gravity(35000.0), 9.6998, 1e-4);
    EXPECT_THROW(gravity(std::nan("")), InputError);
}

TEST(Gravity, DecreasesWithAltitude) {
    double prev = gravity(0.0);
    for (double h = 1000.0; h <= 80000.0; h += 1000.0) {
        const double g = gravity(h);
        EXPECT_LT(g, prev);
        prev = g;
    }
}

TEST(Atmosphere, SeaLevel) {
    const auto s = atmosphere(0.0);
    EXPECT_LT(rel(s.T, 288.15), 1e-3);
    EXPECT_LT(rel(s.p, 101325.0), 1e-3);
    EXPECT_LT(rel(s.rho, 1.225), 1e-3);
    EXPECT_NEAR(s.a, 340.3, 0.1);
}

TEST(Atmosphere, Tropopause) { EXPECT_NEAR(atmosphere(11000.0).T, 216.65, 1e-9); }

TEST(Atmosphere, CruiseAltitude) {
    const auto s = atmosphere(35000.0);
    EXPECT_NEAR(s.T, 237.05, 1e-9);
    EXPECT_NEAR(s.rho, 8.21e-3, 0.01e-3);
    EXPECT_NEAR(s.a, 308.6, 0.05);
}

TEST(Atmosphere, PressureContinuousAtLayerBases) {
    const auto& atm = StandardAtmosphere::us1976();
    for (std::size_t i = 1; i < atm.layers().size(); ++i) {
        const double above = atm.layers()[i].p_base;
        EXPECT_LT(rel(atm.pressure_below(i), above), 1e-9) << "layer " << i;
        const double h = atm.layers()[i].h_base;
        EXPECT_LT(rel(atmosphere(h - 1e-6).p, atmosphere(h).p), 1e-9);
    }
}

TEST(Atmosphere, MonotoneDecreasingPressureAndDensity) {
    for (double h = 0.0; h < 86000.0; h += 250.0) {
        EXPECT_GT(atmosphere(h).p, atmosphere(h + 250.0).p);
        EXPECT_GT(atmosphere(h).rho, atmosphere(h + 250.0).rho);
    }
}

TEST(FlightCondition, Examples) {
    const auto z = flight_condition(0.0, 0.0);
    EXPECT_EQ(z.mach, 0.0);
    EXPECT_EQ(z.dynamic_pressure, 0.0);
    EXPECT_NEAR(flight_condition(0.0, 340.29).mach, 1.0, 1e-3);
    const auto c = flight_condition(35000.0, 2500.0);
    EXPECT_NEAR(c.mach, 8.10, 0.01);
    EXPECT_NEAR(c.dynamic_pressure, 2.57e4, 0.01e4);
    EXPECT_THROW(flight_condition(0.0, -1.0), InputError);
}

TEST(Aero, TableRowsAndInterpolation) {
    const AeroPropulsionModel m;
    auto c = m.aero_coeffs(5.0, 0.0);
    EXPECT_DOUBLE_EQ(c.CL, 0.0);
    EXPECT_DOUBLE_EQ(c.CD, 0.035);
    c = m.aero_coeffs(5.0, 0.1);
    EXPECT_NEAR(c.CL, 0.26, 1e-12);
    EXPECT_NEAR(c.CD, 0.035 + 0.110 * 0.26 * 0.26 + 0.85 * 0.01, 1e-12);
    EXPECT_NEAR(m.aero_coeffs(4.0, 0.0).CD, 0.0325, 1e-12);
    EXPECT_THROW((void)m.aero_coeffs(5.0, deg2rad(20.0)), InputError);
}

TEST(Aero, MachClampedOutsideSchedule) {
    const AeroPropulsionModel m;
    EXPECT_DOUBLE_EQ(m.aero_coeffs(1.0, 0.05).CL, m.aero_coeffs(3.0, 0.05).CL);
    EXPECT_DOUBLE_EQ(m.aero_coeffs(20.0, 0.05).CD, m.aero_coeffs(15.0, 0.05).CD);
}

TEST(Aero, Forces) {
    const AeroPropulsionModel m;
    const auto f0 = m.aero_forces(35000.0, 0.0, 0.1);
    EXPECT_EQ(f0.lift, 0.0);
    EXPECT_EQ(f0.drag, 0.0);
    const auto fc = flight_condition(35000.0, 2500.0);
    const double CL = m.aero_coeffs(fc.mach, deg2rad(5.0)).CL;
    EXPECT_NEAR(CL, 0.203, 1e-3);
    EXPECT_NEAR(m.aero_forces(35000.0, 2500.0, deg2rad(5.0)).lift, fc.dynamic_pressure * 30.0 * CL, 1e-6);
}

TEST(Heating, Examples) {
    const AeroPropulsionModel m;
    EXPECT_EQ(m.heating_rate(35000.0, 0.0), 0.0);
    EXPECT_NEAR(AeroPropulsionModel::heating_rate_from_density(1.0, 1000.0, 1e-5), 1e4, 1e-9);
    EXPECT_NEAR(m.heating_rate(35000.0, 2500.0), 1.42e4, 0.01e4);
}

TEST(Propulsion, TablesAndGate) {
    const AeroPropulsionModel m;
    EXPECT_DOUBLE_EQ(m.thrust_max(30000.0, 7.0), 190000.0);
    EXPECT_DOUBLE_EQ(m.specific_impulse(40000.0, 10.0), 1600.0);
    EXPECT_NEAR(m.thrust_max(25000.0, 4.0), 107500.0, 1e-9);
    EXPECT_DOUBLE_EQ(m.thrust_at_mach(30000.0, 7.0, 1.0), 190000.0);
    EXPECT_DOUBLE_EQ(m.thrust_at_mach(30000.0, 7.0, 0.5), 95000.0);
    for (double h : {20000.0, 35000.0, 60000.0}) EXPECT_EQ(m.thrust_at_mach(h, 3.5, 1.0), 0.0);
    EXPECT_THROW((void)m.thrust_at_mach(30000.0, 7.0, 1.5), InputError);
}

TEST(Propulsion, FuelFlow) {
    const AeroPropulsionModel m;
    EXPECT_EQ(m.fuel_flow(0.0, 30000.0, 7.0), 0.0);
    EXPECT_NEAR(m.fuel_flow(190000.0, 30000.0, 7.0), 190000.0 / (1500.0 * 9.80665), 1e-12);
    EXPECT_NEAR(m.fuel_flow(190000.0, 30000.0, 7.0), 12.916, 1e-3);
}

TEST(Dynamics, LevelFlightHasNoClimbRate) {
    const VehicleDynamics d;
    EXPECT_EQ(d.derivatives({35000.0, 2500.0, 0.0, 12000.0}, {deg2rad(5.0), 0.5}).h, 0.0);
}

TEST(Dynamics, NoThrustMeansNoFuelBurn) {
    const VehicleDynamics d;
    // M ~ 17 lies outside the propulsion gate.
    EXPECT_EQ(d.derivatives({35000.0, 5200.0, 0.0, 12000.0}, {deg2rad(5.0), 1.0}).m, 0.0);
    EXPECT_EQ(d.derivatives({35000.0, 2500.0, 0.0, 12000.0}, {deg2rad(5.0), 0.0}).m, 0.0);
}

TEST(Dynamics, NominalRatesFixture) {
    const VehicleDynamics d;
    const auto r = d.derivatives({35000.0, 2500.0, 0.0, 12000.0}, {deg2rad(5.0), 0.5});
    EXPECT_EQ(r.h, 0.0);
    EXPECT_NEAR(r.V, 3.8640850621939431, 1e-9);
    EXPECT_NEAR(r.gamma, 0.0015899074750257481, 1e-12);
    EXPECT_NEAR(r.m, -5.9206516950104797, 1e-9);
}

TEST(Dynamics, GammaRateFiniteNearZeroSpeed) {
    const VehicleDynamics d;
    const auto r = d.derivatives({35000.0, 1e-6, 0.0, 12000.0}, {0.0, 0.0});
    EXPECT_TRUE(std::isfinite(r.gamma));
}

TEST(Dynamics, RejectsBadInputs) {
    const VehicleDynamics d;
    EXPECT_THROW((void)d.derivatives({std::nan(""), 2500.0, 0.0, 12000.0}, {0.0, 0.0}), InputError);
    EXPECT_THROW((void)d.rk2_step({35000.0, 2500.0, 0.0, 12000.0}, {0.0, 2.0}, 0.5), InputError);
    EXPECT_THROW((void)d.rk2_step({35000.0, 2500.0, 0.0, 12000.0}, {0.0, 0.5}, 0.0), InputError);
}

TEST(Dynamics, MassNeverDropsBelowDryMass) {
    const VehicleDynamics d(AeroPropulsionModel{}, 11999.0);
    VehicleState x{35000.0, 2500.0, 0.0, 12000.0};
    for (int k = 0; k < 20; ++k) x = d.rk2_step(x, {deg2rad(5.0), 1.0}, 0.5);
    EXPECT_GE(x.m, 11999.0);
}

TEST(Rk2, ConstantFieldIsExact) {
    const double x = rk2_midpoint(2.0, 0.3, [](double) { return 1.5; });
    EXPECT_DOUBLE_EQ(x, 2.0 + 0.3 * 1.5);
}

TEST(Rk2, ScalarExponentialStep) {
    const double lambda = -1.0, dt = 0.1;
    const double x = rk2_midpoint(1.0, dt, [&](double v) { return lambda * v; });
    EXPECT_NEAR(x, 1.0 + lambda * dt + 0.5 * lambda * lambda * dt * dt, 1e-15);
}

TEST(Rk2, SecondOrderConvergence) {
    auto err = [](int n) {
        double x = 1.0;
        const double dt = 1.0 / n;
        for (int k = 0; k < n; ++k) x = rk2_midpoint(x, dt, [](double v) { return -v; });
        return std::abs(x - std::exp(-1.0));
    };
    for (int n : {10, 20, 40, 80}) {
        const double order = std::log2(err(n) / err(2 * n));
        EXPECT_GE(order, 1.9);
        EXPECT_LE(order, 2.1);
    }
}

TEST(Constraints, NominalStateHardSafe) {
    const AeroPropulsionModel m;
    const auto v = eval_constraints(m, {}, {35000.0, 2500.0, 0.0, 12000.0}, {deg2rad(5.0), 0.5});
    EXPECT_FALSE(v.hard_any());
    EXPECT_FALSE(v.soft_any());
}

TEST(Constraints, MachEnvelope) {
    const AeroPropulsionModel m;
    const double a = atmosphere(35000.0).a;
    auto v = eval_constraints(m, {}, {35000.0, 16.0 * a, 0.0, 12000.0}, {0.0, 0.5});
    EXPECT_TRUE(v.v[9]);
    v = eval_constraints(m, {}, {35000.0, 3.0 * a, 0.0, 12000.0}, {0.0, 0.5});
    EXPECT_TRUE(v.v[10]);
}

TEST(Constraints, BoundaryCountsAsSatisfied) {
    const AeroPropulsionModel m;
    ConstraintSet lim;
    lim.soft.h_max = 35000.0;
    EXPECT_FALSE(eval_constraints(m, lim, {35000.0, 2500.0, 0.0, 12000.0}, {0.0, 0.5}).v[1]);
}

TEST(Constraints, LoadFactor) {
    const AeroPropulsionModel m;
    EXPECT_EQ(load_factor(m, {35000.0, 0.0, 0.0, 12000.0}, 0.1), 0.0);
    const VehicleState x{35000.0, 2500.0, 0.0, 12000.0};
    const double L = m.aero_forces(x.h, x.V, deg2rad(5.0)).lift;
    EXPECT_NEAR(load_factor(m, x, deg2rad(5.0)), L / (x.m * gravity(x.h)), 1e-12);
    // Lift equal to weight by choosing the mass.
    EXPECT_NEAR(load_factor(m, {x.h, x.V, 0.0, L / gravity(x.h)}, deg2rad(5.0)), 1.0, 1e-12);
}

TEST(Constraints, FlagsMatchHardCheck) {
    const AeroPropulsionModel m;
    const ConstraintSet lim;
    for (double h = 20000.0; h <= 50000.0; h += 5000.0)
        for (double V = 1000.0; V <= 4000.0; V += 250.0)
            for (double al : {3.0, 8.0, 15.0}) {
                const VehicleState x{h, V, 0.0, 9000.0};
                const ControlInput u{deg2rad(al), 0.5};
                EXPECT_EQ(eval_constraints(m, lim, x, u).hard_any(), !hard_constraints_hold(m, lim.hard, x, u));
            }
}

TEST(SafetyBox, MembershipAndDistance) {
    const SafetyBox b;
    EXPECT_TRUE(in_safety_box({35000.0, 2500.0, 0.0, 0.0}, b));
    EXPECT_TRUE(in_safety_box({43000.0, 2500.0, 0.0, 0.0}, b));
    EXPECT_FALSE(in_safety_box({43001.0, 2500.0, 0.0, 0.0}, b));
    EXPECT_EQ(box_distance({35000.0, 2500.0, 0.0, 0.0}, b), 0.0);
    EXPECT_NEAR(box_distance({43000.0, 2500.0, 0.0, 0.0}, b), 1.0, 1e-12);
    EXPECT_NEAR(box_distance({43000.0, 3300.0, deg2rad(5.0), 0.0}, b), std::sqrt(3.0), 1e-12);
}
