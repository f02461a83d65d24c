#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "hyshield/aero_propulsion.hpp"
#include "hyshield/vehicle.hpp"

namespace hyshield {

using ActionId = std::uint32_t;

/// Bitset of action ids; bit a set means action a is admissible.
class ActionMask {
public:
    constexpr ActionMask() = default;
    constexpr explicit ActionMask(std::uint32_t bits) : bits_(bits) {}

    static constexpr ActionMask all(std::size_t n) {
        return ActionMask(n >= 32 ? ~0u : ((1u << n) - 1u));
    }

    [[nodiscard]] constexpr bool contains(ActionId a) const { return a < 32 && ((bits_ >> a) & 1u); }
    constexpr void insert(ActionId a) { bits_ |= (1u << a); }
    constexpr void erase(ActionId a) { bits_ &= ~(1u << a); }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    [[nodiscard]] constexpr int size() const { return std::popcount(bits_); }
    [[nodiscard]] constexpr std::uint32_t bits() const { return bits_; }

    [[nodiscard]] constexpr ActionMask operator&(ActionMask o) const { return ActionMask(bits_ & o.bits_); }
    [[nodiscard]] constexpr ActionMask operator|(ActionMask o) const { return ActionMask(bits_ | o.bits_); }
    constexpr bool operator==(const ActionMask&) const = default;

    /// Ids in ascending order.
    [[nodiscard]] std::vector<ActionId> ids() const {
        std::vector<ActionId> out;
        for (std::uint32_t b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<ActionId>(std::countr_zero(b)));
        return out;
    }

private:
    std::uint32_t bits_ = 0;
};

/// Cartesian (alpha, delta) action grid, flattened alpha-major.
struct ActionGrid {
    std::vector<double> alpha_deg{3.0, 5.0, 8.0, 12.0, 15.0};
    std::vector<double> delta{0.25, 0.50, 0.75, 1.00};

    void validate() const {
        if (alpha_deg.empty() || delta.empty()) throw std::invalid_argument("action grid must be non-empty");
        if (size() > 32) throw std::invalid_argument("action grid supports at most 32 actions");
    }

    [[nodiscard]] std::size_t size() const { return alpha_deg.size() * delta.size(); }
    [[nodiscard]] std::size_t alpha_levels() const { return alpha_deg.size(); }
    [[nodiscard]] std::size_t delta_levels() const { return delta.size(); }

    [[nodiscard]] ActionId id(std::size_t i_alpha, std::size_t i_delta) const {
        if (i_alpha >= alpha_levels() || i_delta >= delta_levels()) throw std::out_of_range("action index");
        return static_cast<ActionId>(i_alpha * delta_levels() + i_delta);
    }
    [[nodiscard]] std::size_t alpha_index(ActionId a) const { return a / delta_levels(); }
    [[nodiscard]] std::size_t delta_index(ActionId a) const { return a % delta_levels(); }

    [[nodiscard]] ControlInput control(ActionId a) const {
        if (a >= size()) throw std::out_of_range("action id");
        return {deg2rad(alpha_deg[alpha_index(a)]), delta[delta_index(a)]};
    }

    [[nodiscard]] int manhattan(ActionId a, ActionId b) const {
        const auto da = static_cast<int>(alpha_index(a)) - static_cast<int>(alpha_index(b));
        const auto dd = static_cast<int>(delta_index(a)) - static_cast<int>(delta_index(b));
        return std::abs(da) + std::abs(dd);
    }

    /// Actions within `r` grid steps of `a` (Manhattan), `a` included.
    [[nodiscard]] ActionMask neighborhood(ActionId a, int r) const {
        if (r < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
        ActionMask out;
        for (ActionId b = 0; b < size(); ++b)
            if (manhattan(a, b) <= r) out.insert(b);
        return out;
    }
};

} // namespace hyshield
