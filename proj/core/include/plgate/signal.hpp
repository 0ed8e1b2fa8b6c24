#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace plgate {

/// A uniformly sampled signal, read as the piecewise-linear function through
/// (i, values[i]) for i = 0..n-1.
struct Signal {
    std::vector<double> values;
    std::optional<int> label;

    Signal() = default;
    explicit Signal(std::vector<double> v, std::optional<int> lbl = std::nullopt)
        : values(std::move(v)), label(lbl) {}

    std::size_t size() const noexcept { return values.size(); }
};

/// Throws plgate::Error unless n >= 2 and every sample is finite.
void validate(const Signal& s);

/// Affine rescaling onto [0, 1]. Constant signals map to all zeros.
Signal standardize(const Signal& s);

enum class ExtremumKind : std::uint8_t { minimum, maximum };

struct CriticalPoint {
    double x = 0.0;
    double y = 0.0;
    ExtremumKind kind = ExtremumKind::minimum;

    friend bool operator==(const CriticalPoint&, const CriticalPoint&) = default;
};

/// Local extrema of the PL interpolation, ordered by x. Runs of equal values
/// collapse to one point at the run's leftmost index, except that a run
/// touching an end of the signal is represented by that endpoint. Both
/// endpoints are always reported. Minima and maxima alternate.
///
/// A constant signal yields a single minimum at x = 0.
std::vector<CriticalPoint> critical_points(const Signal& s);

/// Same as critical_points, returning only the sample indices.
std::vector<std::size_t> critical_indices(std::span<const double> values);

} // namespace plgate
