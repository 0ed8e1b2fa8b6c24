#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "plgate/persistence.hpp"
#include "plgate/signal.hpp"

namespace plgate {

/// max{0, min{t - birth, death - t}}
struct TentFunction {
    double birth = 0.0;
    double death = 0.0;

    double operator()(double t) const noexcept;
};

/// Uniform grid of m points covering [t_min, t_max].
struct LandscapeGrid {
    double t_min = 0.0;
    double t_max = 1.0;
    std::size_t m = 100;

    void validate() const;
    double spacing() const noexcept { return (t_max - t_min) / static_cast<double>(m - 1); }
    double at(std::size_t j) const noexcept;

    friend bool operator==(const LandscapeGrid&, const LandscapeGrid&) = default;
};

/// K discretized landscape levels on a shared grid, stored row-major: row k-1
/// holds lambda_k.
class LandscapeStack {
public:
    LandscapeStack() = default;
    LandscapeStack(std::size_t levels, LandscapeGrid grid, bool normalized = false);

    std::size_t levels() const noexcept { return levels_; }
    std::size_t width() const noexcept { return grid_.m; }
    const LandscapeGrid& grid() const noexcept { return grid_; }
    bool normalized() const noexcept { return normalized_; }
    void set_normalized(bool v) noexcept { normalized_ = v; }

    std::span<double> row(std::size_t k);
    std::span<const double> row(std::size_t k) const;
    double at(std::size_t k, std::size_t j) const { return data_[k * grid_.m + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    friend bool operator==(const LandscapeStack&, const LandscapeStack&) = default;

private:
    std::size_t levels_ = 0;
    LandscapeGrid grid_{};
    bool normalized_ = false;
    std::vector<double> data_;
};

/// Trapezoidal-rule integral of uniformly spaced samples.
double trapezoid_area(std::span<const double> row, double spacing) noexcept;

/// lambda_k(t) = k-th largest tent value over the diagram's pairs, sampled
/// on `grid` for k = 1..K. Missing levels are zero.
LandscapeStack landscape_stack(const PersistenceDiagram& d, const LandscapeGrid& grid, std::size_t K);

/// Divides every nonzero row by its trapezoidal area; zero rows stay zero.
LandscapeStack normalize_area(const LandscapeStack& ls);

struct StackOptions {
    LandscapeGrid grid{};
    std::size_t levels = 10;
    bool normalize = true;
    unsigned threads = 1;
};

/// sublevel_diagram -> landscape_stack -> optional normalize_area for each
/// signal. Output order matches input order for any thread count.
std::vector<LandscapeStack> stack_dataset(std::span<const Signal> signals, const StackOptions& opts);

} // namespace plgate
