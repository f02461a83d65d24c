#pragma once

// Point-mass longitudinal equations of motion and their midpoint (RK2) discretization.

#include <cmath>

#include "hyshield/aero_propulsion.hpp"
#include "hyshield/errors.hpp"

namespace hyshield {

struct VehicleState {
    double h = 0.0;     ///< altitude [m]
    double V = 0.0;     ///< speed [m/s]
    double gamma = 0.0; ///< flight-path angle [rad]
    double m = 0.0;     ///< mass [kg]

    friend VehicleState operator+(const VehicleState& a, const VehicleState& b) {
        return {a.h + b.h, a.V + b.V, a.gamma + b.gamma, a.m + b.m};
    }
    friend VehicleState operator*(double s, const VehicleState& a) { return {s * a.h, s * a.V, s * a.gamma, s * a.m}; }
    friend bool operator==(const VehicleState&, const VehicleState&) = default;

    [[nodiscard]] bool finite() const {
        return std::isfinite(h) && std::isfinite(V) && std::isfinite(gamma) && std::isfinite(m);
    }
};

/// Time derivative of a VehicleState; same layout.
using StateRate = VehicleState;

struct ControlInput {
    double alpha = 0.0; ///< angle of attack [rad]
    double delta = 0.0; ///< throttle [0, 1]
};

/// Explicit midpoint rule with the input held over the step.
template <typename State, typename Field>
State rk2_midpoint(const State& x, double dt, Field&& field) {
    const State k1 = field(x);
    const State mid = x + (0.5 * dt) * k1;
    return x + dt * field(mid);
}

class VehicleDynamics {
public:
    explicit VehicleDynamics(AeroPropulsionModel model = {}, double dry_mass = 6000.0)
        : model_(std::move(model)), dry_mass_(dry_mass) {
        if (!(dry_mass_ > 0.0)) throw std::invalid_argument("dry mass must be positive");
    }

    [[nodiscard]] StateRate derivatives(const VehicleState& x, const ControlInput& u) const {
        if (!x.finite()) throw InputError("non-finite vehicle state");
        if (!(x.m > 0.0)) throw InputError("vehicle mass must be positive");
        const auto& atm = model_.atmosphere();
        const auto fc = atm.flight_condition(x.h, x.V);
        const auto forces = model_.aero_forces(x.h, x.V, u.alpha);
        const double T = model_.thrust_at_mach(x.h, fc.mach, u.delta);
        const double g = gravity(x.h, model_.gravity_constants());
        const double weight = x.m * g;

        StateRate r;
        r.h = x.V * std::sin(x.gamma);
        r.V = (T * std::cos(u.alpha) - forces.drag - weight * std::sin(x.gamma)) / x.m;
        r.gamma = (forces.lift + T * std::sin(u.alpha) - weight * std::cos(x.gamma)) / (x.m * std::max(x.V, 1.0));
        // Propellant exhausted: the mass stays on the dry floor.
        r.m = (x.m <= dry_mass_) ? 0.0 : -model_.fuel_flow(T, x.h, fc.mach);
        return r;
    }

    [[nodiscard]] VehicleState rk2_step(const VehicleState& x, const ControlInput& u, double dt) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
        if (!x.finite()) throw InputError("non-finite vehicle state");
        const auto& p = model_.params();
        if (!(u.alpha >= p.alpha_min && u.alpha <= p.alpha_max) || !(u.delta >= 0.0 && u.delta <= 1.0))
            throw InputError("control input outside its limits");
        VehicleState next;
        try {
            next = rk2_midpoint(x, dt, [&](const VehicleState& s) {
                if (!s.finite() || s.V < 0.0 || !(s.m > 0.0))
                    throw IntegrationError("non-finite or non-physical intermediate state");
                return derivatives(s, u);
            });
        } catch (const InputError& e) {
            throw IntegrationError(e.what());
        }
        if (!next.finite() || next.V < 0.0) throw IntegrationError("non-finite state after RK2 step");
        next.m = std::max(next.m, std::min(x.m, dry_mass_));
        return next;
    }

    [[nodiscard]] const AeroPropulsionModel& model() const { return model_; }
    [[nodiscard]] double dry_mass() const { return dry_mass_; }

private:
    AeroPropulsionModel model_;
    double dry_mass_;
};

} // namespace hyshield
