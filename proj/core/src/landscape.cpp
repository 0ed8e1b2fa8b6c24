#include "plgate/landscape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include "plgate/error.hpp"

namespace plgate {

double TentFunction::operator()(double t) const noexcept {
    return std::max(0.0, std::min(t - birth, death - t));
}

void LandscapeGrid::validate() const {
    if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max)) {
        throw Error("landscape grid needs finite t_min < t_max");
    }
    if (m < 2) {
        throw Error("landscape grid needs at least 2 points");
    }
}

double LandscapeGrid::at(std::size_t j) const noexcept {
    if (j + 1 == m) {
        return t_max;
    }
    return t_min + spacing() * static_cast<double>(j);
}

LandscapeStack::LandscapeStack(std::size_t levels, LandscapeGrid grid, bool normalized)
    : levels_(levels), grid_(grid), normalized_(normalized), data_(levels * grid.m, 0.0) {}

std::span<double> LandscapeStack::row(std::size_t k) {
    if (k >= levels_) {
        throw Error("landscape row " + std::to_string(k) + " out of range");
    }
    return std::span<double>(data_).subspan(k * grid_.m, grid_.m);
}

std::span<const double> LandscapeStack::row(std::size_t k) const {
    if (k >= levels_) {
        throw Error("landscape row " + std::to_string(k) + " out of range");
    }
    return std::span<const double>(data_).subspan(k * grid_.m, grid_.m);
}

double trapezoid_area(std::span<const double> row, double spacing) noexcept {
    if (row.size() < 2) {
        return 0.0;
    }
    double inner = 0.0;
    for (std::size_t j = 1; j + 1 < row.size(); ++j) {
        inner += row[j];
    }
    return spacing * (inner + 0.5 * (row.front() + row.back()));
}

LandscapeStack landscape_stack(const PersistenceDiagram& d, const LandscapeGrid& grid, std::size_t K) {
    grid.validate();
    if (K == 0) {
        throw Error("landscape needs at least one level");
    }
    LandscapeStack out(K, grid);
    if (d.pairs.empty()) {
        return out;
    }
    std::vector<TentFunction> tents;
    tents.reserve(d.pairs.size());
    for (const auto& p : d.pairs) {
        tents.push_back({p.birth, p.death});
    }
    std::vector<double> values(tents.size());
    const std::size_t top = std::min(K, tents.size());
    for (std::size_t j = 0; j < grid.m; ++j) {
        const double t = grid.at(j);
        std::transform(tents.begin(), tents.end(), values.begin(), [t](const TentFunction& f) { return f(t); });
        std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(top), values.end(),
                          std::greater<>());
        for (std::size_t k = 0; k < top; ++k) {
            out.row(k)[j] = values[k];
        }
    }
    return out;
}

LandscapeStack normalize_area(const LandscapeStack& ls) {
    if (ls.normalized()) {
        throw Error("landscape stack is already area-normalized");
    }
    LandscapeStack out = ls;
    const double h = ls.grid().spacing();
    for (std::size_t k = 0; k < out.levels(); ++k) {
        auto row = out.row(k);
        const double area = trapezoid_area(row, h);
        if (area > 0.0) {
            for (double& x : row) {
                x /= area;
            }
        }
    }
    out.set_normalized(true);
    return out;
}

std::vector<LandscapeStack> stack_dataset(std::span<const Signal> signals, const StackOptions& opts) {
    opts.grid.validate();
    if (opts.levels == 0) {
        throw Error("landscape needs at least one level");
    }
    std::vector<LandscapeStack> out(signals.size());

    auto one = [&](std::size_t i) {
        try {
            auto ls = landscape_stack(sublevel_diagram(signals[i]), opts.grid, opts.levels);
            out[i] = opts.normalize ? normalize_area(ls) : std::move(ls);
        } catch (const Error& e) {
            throw Error("signal " + std::to_string(i) + ": " + e.what());
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(signals.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < signals.size(); ++i) {
            one(i);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::size_t failed_at = signals.size();
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < signals.size(); i = next++) {
                try {
                    one(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    // keep the lowest failing index so errors are reproducible
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

} // namespace plgate
