#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hyshield {

namespace detail {

/// Index i of the cell [grid[i], grid[i+1]] containing x (x already clamped to the hull).
inline std::size_t cell_index(std::span<const double> grid, double x) {
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    auto i = static_cast<std::size_t>(std::distance(grid.begin(), it));
    i = (i == 0) ? 0 : i - 1;
    return std::min(i, grid.size() - 2);
}

inline void check_grid(std::span<const double> grid, const char* name) {
    if (grid.size() < 2) throw std::invalid_argument(std::string(name) + ": need at least two grid points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument(std::string(name) + ": grid must be strictly increasing");
}

} // namespace detail

/// Piecewise-linear interpolation on a strictly increasing grid, clamped at the ends.
template <typename T>
T lerp_clamped(std::span<const double> grid, std::span<const T> values, double x) {
    const double xc = std::clamp(x, grid.front(), grid.back());
    const std::size_t i = detail::cell_index(grid, xc);
    const double lambda = (xc - grid[i]) / (grid[i + 1] - grid[i]);
    return values[i] * (1.0 - lambda) + values[i + 1] * lambda;
}

/// Row-major 2-D lookup table with bilinear interpolation. Queries outside the
/// grid hull are clamped to the nearest edge first.
template <typename T = double>
class LookupTable2d {
public:
    LookupTable2d() = default;

    LookupTable2d(std::vector<double> rows, std::vector<double> cols, std::vector<T> values)
        : rows_(std::move(rows)), cols_(std::move(cols)), values_(std::move(values)) {
        detail::check_grid(rows_, "table rows");
        detail::check_grid(cols_, "table columns");
        if (values_.size() != rows_.size() * cols_.size())
            throw std::invalid_argument("table value count does not match grid");
    }

    [[nodiscard]] const T& at(std::size_t r, std::size_t c) const { return values_[r * cols_.size() + c]; }

    [[nodiscard]] T operator()(double r, double c) const {
        const double rc = std::clamp(r, rows_.front(), rows_.back());
        const double cc = std::clamp(c, cols_.front(), cols_.back());
        const std::size_t i = detail::cell_index(rows_, rc);
        const std::size_t j = detail::cell_index(cols_, cc);
        const double lr = (rc - rows_[i]) / (rows_[i + 1] - rows_[i]);
        const double lc = (cc - cols_[j]) / (cols_[j + 1] - cols_[j]);
        // Weights sum to one; exact at grid nodes (one weight is 1, the rest 0).
        return at(i, j) * ((1.0 - lr) * (1.0 - lc)) + at(i + 1, j) * (lr * (1.0 - lc)) +
               at(i, j + 1) * ((1.0 - lr) * lc) + at(i + 1, j + 1) * (lr * lc);
    }

    [[nodiscard]] std::span<const double> rows() const { return rows_; }
    [[nodiscard]] std::span<const double> cols() const { return cols_; }
    [[nodiscard]] std::span<const T> values() const { return values_; }

private:
    std::vector<double> rows_;
    std::vector<double> cols_;
    std::vector<T> values_;
};

} // namespace hyshield
