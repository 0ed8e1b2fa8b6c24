#include "plgate/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "plgate/error.hpp"

namespace plgate {

namespace {

bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void push_unique(std::vector<double>& out, double v) {
    if (std::none_of(out.begin(), out.end(), [v](double u) { return nearly_equal(u, v); })) {
        out.push_back(v);
    }
}

double kth_largest(std::vector<double>& buf, std::size_t k) {
    if (k > buf.size()) {
        return 0.0;
    }
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1), buf.end(), std::greater<>());
    return buf[k - 1];
}

} // namespace

void LandscapePolyline::validate() const {
    if (t.size() != l.size()) {
        throw Error("polyline t and l lengths differ");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(l[i]) || l[i] < 0.0) {
            throw Error("polyline vertex " + std::to_string(i) + " is invalid");
        }
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw Error("polyline t-coordinates must increase");
        }
    }
}

LandscapePolyline exact_level(const PersistenceDiagram& d, std::size_t k) {
    if (k == 0) {
        throw Error("landscape levels are numbered from 1");
    }
    LandscapePolyline out;
    if (d.pairs.size() < k) {
        return out;
    }
    // Kinks of any level sit at tent endpoints, tent peaks, or crossings of an
    // ascending and a descending tent edge.
    std::vector<double> cand;
    cand.reserve(d.pairs.size() * (d.pairs.size() + 3));
    for (const auto& p : d.pairs) {
        cand.push_back(p.birth);
        cand.push_back(p.death);
        for (const auto& q : d.pairs) {
            if (p.birth < q.death) {
                cand.push_back(0.5 * (p.birth + q.death));
            }
        }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), nearly_equal), cand.end());

    std::vector<double> buf(d.pairs.size());
    for (const double t : cand) {
        std::transform(d.pairs.begin(), d.pairs.end(), buf.begin(),
                       [t](const PersistencePair& p) { return TentFunction{p.birth, p.death}(t); });
        out.t.push_back(t);
        out.l.push_back(kth_largest(buf, k));
    }
    if (std::all_of(out.l.begin(), out.l.end(), [](double v) { return v == 0.0; })) {
        return {};
    }
    return out;
}

LandscapePolyline sampled_level(const LandscapeStack& ls, std::size_t k) {
    if (k == 0 || k > ls.levels()) {
        throw Error("level " + std::to_string(k) + " outside 1.." + std::to_string(ls.levels()));
    }
    LandscapePolyline out;
    const auto row = ls.row(k - 1);
    out.l.assign(row.begin(), row.end());
    out.t.resize(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out.t[j] = ls.grid().at(j);
    }
    return out;
}

std::vector<double> get_y_values(const LandscapePolyline& p, const YValueOptions& opts) {
    p.validate();
    const auto& t = p.t;
    const auto& l = p.l;
    const std::size_t n = p.size();

    // Runs of equal values; a flat top sampled on a grid is one extremum.
    struct Run {
        std::size_t first, last;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0, start = 0; i <= n; ++i) {
        if (i == n || l[i] != l[start]) {
            if (i > start) {
                runs.push_back({start, i - 1});
            }
            start = i;
        }
    }

    std::vector<double> crits;
    auto emit_extremum = [&](double at) {
        if (crits.empty()) {
            crits.push_back(at); // leading extremum: nothing to pair with
        } else {
            crits.push_back(2.0 * at - crits.back());
        }
    };

    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto [a, e] = runs[r];
        const bool has_prev = r > 0;
        const bool has_next = r + 1 < runs.size();
        const double v = l[a];

        if (v == 0.0) {
            // A lone zero between positive values is a take-off only; a longer
            // zero run starts with a touchdown.
            if (has_prev && (a < e || !has_next)) {
                emit_extremum(opts.refine ? t[a - 1] + l[a - 1] : t[a]);
            }
            if (has_next) {
                crits.push_back(opts.refine ? t[e + 1] - l[e + 1] : t[e]);
            }
            continue;
        }
        if (!has_prev || !has_next) {
            continue;
        }
        const double before = l[a - 1];
        const double after = l[e + 1];
        if (v > before && v > after) {
            emit_extremum(opts.refine ? 0.5 * (after - before + t[a - 1] + t[e + 1]) : 0.5 * (t[a] + t[e]));
        } else if (v < before && v < after) {
            emit_extremum(opts.refine ? 0.5 * (before - after + t[a - 1] + t[e + 1]) : 0.5 * (t[a] + t[e]));
        }
    }

    std::vector<double> out;
    for (const double c : crits) {
        push_unique(out, c);
    }
    return out;
}

std::vector<double> get_x_values(std::span<const double> crits, const Signal& original, double threshold) {
    validate(original);
    const auto& v = original.values;
    std::vector<char> is_critical(v.size(), 0);
    for (const std::size_t i : critical_indices(v)) {
        is_critical[i] = 1;
    }
    std::vector<char> taken(v.size(), 0);
    std::vector<double> out;
    for (const double crit : crits) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double diff = v[i] - crit;
            if (diff * diff < threshold && is_critical[i] && !taken[i]) {
                taken[i] = 1;
                out.push_back(static_cast<double>(i));
            }
        }
    }
    return out;
}

double grid_match_threshold(double spacing) noexcept {
    return std::max(kMatchThreshold, spacing * spacing);
}

Signal resample(std::span<const CriticalPoint> points, std::size_t n) {
    if (points.empty()) {
        throw Error("cannot resample an empty point list");
    }
    Signal out;
    out.values.resize(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i);
        while (seg + 1 < points.size() && points[seg + 1].x <= x) {
            ++seg;
        }
        const auto& p = points[seg];
        if (seg + 1 == points.size() || x <= p.x) {
            out.values[i] = p.y;
            continue;
        }
        const auto& q = points[seg + 1];
        const double w = (x - p.x) / (q.x - p.x);
        out.values[i] = p.y + w * (q.y - p.y);
    }
    return out;
}

Reconstruction reconstruct(std::span<const LandscapePolyline> levels, const Signal& original,
                           const ReconstructOptions& opts) {
    validate(original);
    Reconstruction out;
    std::vector<double> xs;
    for (const auto& level : levels) {
        const auto ys = get_y_values(level, opts.y_values);
        for (const double y : ys) {
            push_unique(out.y_values, y);
        }
        for (const double x : get_x_values(ys, original, opts.match_threshold)) {
            xs.push_back(x);
        }
    }
    if (xs.empty()) {
        throw Error("no critical point of the signal matches the given landscape levels");
    }

    const auto& v = original.values;
    const std::size_t n = v.size();
    const auto crit = critical_points(original);
    if (opts.anchor_endpoints) {
        xs.push_back(0.0);
        xs.push_back(static_cast<double>(n - 1));
    }
    if (opts.anchor_global_minimum) {
        const double lowest = *std::min_element(v.begin(), v.end());
        for (const auto& cp : crit) {
            if (cp.y == lowest) {
                xs.push_back(cp.x);
            }
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::map<double, ExtremumKind> kinds;
    for (const auto& cp : crit) {
        kinds.emplace(cp.x, cp.kind);
    }
    for (const double x : xs) {
        out.points.push_back({x, v[static_cast<std::size_t>(x)], kinds.at(x)});
    }
    out.simplified = resample(out.points, n);
    out.simplified.label = original.label;
    return out;
}

Reconstruction reconstruct_from_levels(const Signal& original, std::span<const std::size_t> levels,
                                       const ReconstructOptions& opts) {
    const auto diagram = sublevel_diagram(original);
    std::vector<LandscapePolyline> polylines;
    for (const std::size_t k : levels) {
        auto p = exact_level(diagram, k);
        if (p.size() > 0) {
            polylines.push_back(std::move(p));
        }
    }
    return reconstruct(polylines, original, opts);
}

void to_json(nlohmann::json& j, const Reconstruction& r) {
    auto pts = nlohmann::json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"x", p.x}, {"y", p.y}, {"kind", p.kind == ExtremumKind::minimum ? "min" : "max"}});
    }
    j = nlohmann::json{{"points", std::move(pts)}, {"simplified", r.simplified.values}, {"y_values", r.y_values}};
}

} // namespace plgate
