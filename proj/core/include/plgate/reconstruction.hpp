#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "plgate/landscape.hpp"
#include "plgate/persistence.hpp"
#include "plgate/signal.hpp"

namespace plgate {

/// Matching threshold on squared differences between landscape-derived
/// y-values and signal samples.
inline constexpr double kMatchThreshold = 1e-4;

/// One landscape level read as the polyline through (t[i], l[i]).
struct LandscapePolyline {
    std::vector<double> t;
    std::vector<double> l;

    void validate() const;
    std::size_t size() const noexcept { return t.size(); }
};

/// lambda_k (k >= 1) as an exact polyline: its vertices are every kink of the
/// level, so no grid error enters the y-value recovery. Empty if the level is
/// identically zero.
LandscapePolyline exact_level(const PersistenceDiagram& d, std::size_t k);

/// Row k (1-based) of a stack as a polyline on the stack's grid.
LandscapePolyline sampled_level(const LandscapeStack& ls, std::size_t k);

struct YValueOptions {
    /// Re-locate each detected vertex at the intersection of the unit-slope
    /// lines through its neighbours. Only meaningful for sampled polylines,
    /// where peaks fall between grid points.
    bool refine = false;
};

/// Scans the polyline left to right. A take-off vertex (zero followed by a
/// positive value) contributes its t. A local minimum or maximum contributes
/// 2 t - previous entry, which turns a peak at (b + d) / 2 into d and a dip
/// between two tents into the next birth. Duplicates are removed keeping
/// first occurrences.
std::vector<double> get_y_values(const LandscapePolyline& p, const YValueOptions& opts = {});

/// Sample indices whose value lies within sqrt(threshold) of some crit value
/// and that are critical points of `original`. First occurrence order.
std::vector<double> get_x_values(std::span<const double> crits, const Signal& original,
                                 double threshold = kMatchThreshold);

struct Reconstruction {
    std::vector<CriticalPoint> points;
    Signal simplified;
    /// All y-values gathered from the levels (diagnostic).
    std::vector<double> y_values;
};

struct ReconstructOptions {
    double match_threshold = kMatchThreshold;
    YValueOptions y_values{};
    /// The first and last sample are always kept.
    bool anchor_endpoints = true;
    /// The global minimum carries the essential class, which no landscape
    /// level records; keep it as an anchor too.
    bool anchor_global_minimum = true;
};

/// Union of matched critical points over the given levels plus anchors, sorted
/// by x, and the PL signal through them resampled on the original grid.
/// Throws if the levels match no critical point.
Reconstruction reconstruct(std::span<const LandscapePolyline> levels, const Signal& original,
                           const ReconstructOptions& opts = {});

/// Diagram of `original`, exact polylines of the given 1-based levels (zero
/// levels skipped), then reconstruct.
Reconstruction reconstruct_from_levels(const Signal& original, std::span<const std::size_t> levels,
                                       const ReconstructOptions& opts = {});

/// Threshold suited to a polyline sampled with spacing h.
double grid_match_threshold(double spacing) noexcept;

/// PL interpolation through `points` (sorted by x) evaluated at 0..n-1.
Signal resample(std::span<const CriticalPoint> points, std::size_t n);

void to_json(nlohmann::json& j, const Reconstruction& r);

} // namespace plgate
