#include "plgate/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plgate/error.hpp"

namespace plgate {

void validate(const Signal& s) {
    if (s.values.size() < 2) {
        throw Error("signal needs at least 2 samples, got " + std::to_string(s.values.size()));
    }
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (!std::isfinite(s.values[i])) {
            throw Error("signal sample " + std::to_string(i) + " is not finite");
        }
    }
}

Signal standardize(const Signal& s) {
    validate(s);
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    const double min = *lo;
    const double range = *hi - min;
    Signal out;
    out.label = s.label;
    out.values.resize(s.values.size(), 0.0);
    if (range > 0.0) {
        std::transform(s.values.begin(), s.values.end(), out.values.begin(),
                       [&](double v) { return (v - min) / range; });
    }
    return out;
}

namespace {

struct Run {
    std::size_t first;
    std::size_t last;
    double value;
};

std::vector<Run> equal_runs(std::span<const double> v) {
    std::vector<Run> runs;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= v.size(); ++i) {
        if (i == v.size() || v[i] != v[start]) {
            runs.push_back({start, i - 1, v[start]});
            start = i;
        }
    }
    return runs;
}

struct RawExtremum {
    std::size_t index;
    ExtremumKind kind;
};

std::vector<RawExtremum> scan_extrema(std::span<const double> v) {
    std::vector<RawExtremum> out;
    if (v.empty()) {
        return out;
    }
    const auto runs = equal_runs(v);
    if (runs.size() == 1) {
        out.push_back({0, ExtremumKind::minimum});
        return out;
    }
    const auto last = runs.size() - 1;
    out.push_back({0, runs[1].value > runs[0].value ? ExtremumKind::minimum : ExtremumKind::maximum});
    for (std::size_t r = 1; r < last; ++r) {
        const double prev = runs[r - 1].value;
        const double next = runs[r + 1].value;
        const double cur = runs[r].value;
        if (cur > prev && cur > next) {
            out.push_back({runs[r].first, ExtremumKind::maximum});
        } else if (cur < prev && cur < next) {
            out.push_back({runs[r].first, ExtremumKind::minimum});
        }
    }
    out.push_back({v.size() - 1, runs[last - 1].value > runs[last].value ? ExtremumKind::minimum
                                                                         : ExtremumKind::maximum});
    return out;
}

} // namespace

std::vector<CriticalPoint> critical_points(const Signal& s) {
    validate(s);
    std::vector<CriticalPoint> out;
    for (const auto& e : scan_extrema(s.values)) {
        out.push_back({static_cast<double>(e.index), s.values[e.index], e.kind});
    }
    return out;
}

std::vector<std::size_t> critical_indices(std::span<const double> values) {
    std::vector<std::size_t> out;
    for (const auto& e : scan_extrema(values)) {
        out.push_back(e.index);
    }
    return out;
}

} // namespace plgate
