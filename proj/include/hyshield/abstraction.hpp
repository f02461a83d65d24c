#pragma once

// Uniform grid aggregation of the continuous state and its representatives.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hyshield/aero_propulsion.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/vehicle.hpp"

namespace hyshield {

struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    int bins = 1;

    [[nodiscard]] double width() const { return (hi - lo) / bins; }
    [[nodiscard]] double edge(int k) const { return lo + (hi - lo) * k / bins; }
    [[nodiscard]] double center(int k) const { return lo + (hi - lo) * (k + 0.5) / bins; }

    /// Half-open bins [edge(k), edge(k+1)), last bin closed; out-of-range values clamp.
    [[nodiscard]] int bin_of(double x) const {
        if (x <= lo) return 0;
        if (x >= hi) return bins - 1;
        int k = static_cast<int>(std::floor((x - lo) * bins / (hi - lo)));
        k = std::clamp(k, 0, bins - 1);
        if (k + 1 < bins && x >= edge(k + 1)) ++k;
        else if (k > 0 && x < edge(k)) --k;
        return k;
    }
};

inline constexpr std::size_t kStateDims = 4;

/// Per-dimension axes in the order (h, V, gamma, m).
struct GridSpec {
    std::array<GridAxis, kStateDims> axes;

    static GridSpec defaults() {
        return {{{
            {19000.0, 51000.0, 21},
            {900.0, 4100.0, 21},
            {deg2rad(-10.0), deg2rad(10.0), 11},
            {6000.0, 12000.0, 2},
        }}};
    }

    void validate() const {
        for (const auto& a : axes) {
            if (a.bins < 1) throw std::invalid_argument("grid: bin count must be >= 1");
            if (!(a.lo < a.hi)) throw std::invalid_argument("grid: bounds must be ordered");
        }
    }

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= static_cast<std::size_t>(a.bins);
        return n;
    }

    const GridAxis& h() const { return axes[0]; }
    const GridAxis& V() const { return axes[1]; }
    const GridAxis& gamma() const { return axes[2]; }
    const GridAxis& m() const { return axes[3]; }
};

using StateId = std::uint32_t;
using Index4 = std::array<int, kStateDims>;

struct AbstractState {
    Index4 index{};
    StateId id = 0;
    friend bool operator==(const AbstractState&, const AbstractState&) = default;
};

/// Row-major flattening: h slowest, then V, gamma, m fastest.
inline StateId flatten(const Index4& idx, const GridSpec& grid) {
    std::size_t id = 0;
    for (std::size_t d = 0; d < kStateDims; ++d) {
        const int n = grid.axes[d].bins;
        if (idx[d] < 0 || idx[d] >= n) throw std::out_of_range("abstract index out of range");
        id = id * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[d]);
    }
    return static_cast<StateId>(id);
}

inline Index4 unflatten(StateId id, const GridSpec& grid) {
    if (id >= grid.size()) throw std::out_of_range("abstract state id out of range");
    Index4 idx{};
    std::size_t rest = id;
    for (std::size_t d = kStateDims; d-- > 0;) {
        const auto n = static_cast<std::size_t>(grid.axes[d].bins);
        idx[d] = static_cast<int>(rest % n);
        rest /= n;
    }
    return idx;
}

inline AbstractState make_state(StateId id, const GridSpec& grid) { return {unflatten(id, grid), id}; }

inline std::array<double, kStateDims> as_array(const VehicleState& x) { return {x.h, x.V, x.gamma, x.m}; }

inline AbstractState project(const VehicleState& x, const GridSpec& grid) {
    if (!x.finite()) throw InputError("cannot project a non-finite state");
    const auto c = as_array(x);
    Index4 idx{};
    for (std::size_t d = 0; d < kStateDims; ++d) idx[d] = grid.axes[d].bin_of(c[d]);
    return {idx, flatten(idx, grid)};
}

inline VehicleState representative(const AbstractState& s, const GridSpec& grid) {
    for (std::size_t d = 0; d < kStateDims; ++d)
        if (s.index[d] < 0 || s.index[d] >= grid.axes[d].bins) throw std::out_of_range("abstract index out of range");
    return {grid.axes[0].center(s.index[0]), grid.axes[1].center(s.index[1]), grid.axes[2].center(s.index[2]),
            grid.axes[3].center(s.index[3])};
}

inline VehicleState representative(StateId id, const GridSpec& grid) { return representative(make_state(id, grid), grid); }

inline std::vector<AbstractState> enumerate_states(const GridSpec& grid) {
    std::vector<AbstractState> out;
    out.reserve(grid.size());
    for (StateId id = 0; id < grid.size(); ++id) out.push_back(make_state(id, grid));
    return out;
}

/// False once x lies more than `tolerance_bins` bin widths outside the grid hull in any dimension.
inline bool within_grid_guard(const VehicleState& x, const GridSpec& grid, double tolerance_bins = 1.0) {
    const auto c = as_array(x);
    for (std::size_t d = 0; d < kStateDims; ++d) {
        const auto& a = grid.axes[d];
        const double tol = tolerance_bins * a.width();
        if (c[d] < a.lo - tol || c[d] > a.hi + tol) return false;
    }
    return true;
}

} // namespace hyshield
