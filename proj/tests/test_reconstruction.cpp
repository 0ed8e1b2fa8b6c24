#include <doctest/doctest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "plgate/error.hpp"
#include "plgate/landscape.hpp"
#include "plgate/persistence.hpp"
#include "plgate/reconstruction.hpp"

using plgate::LandscapePolyline;
using plgate::Signal;

namespace {

plgate::PersistenceDiagram diagram(const std::vector<std::pair<double, double>>& pairs) {
    plgate::PersistenceDiagram d;
    for (const auto& [b, e] : pairs) {
        d.pairs.push_back({b, e, 0, 0});
    }
    return d;
}

std::vector<std::size_t> all_levels(const plgate::PersistenceDiagram& d) {
    std::vector<std::size_t> k(d.pairs.size());
    std::iota(k.begin(), k.end(), std::size_t{1});
    return k;
}

std::set<double> xs_of(const plgate::Reconstruction& r) {
    std::set<double> out;
    for (const auto& p : r.points) {
        out.insert(p.x);
    }
    return out;
}

// Standardized [2, 5, 0, 4, 1, 3].
const Signal kZigzag({0.4, 1.0, 0.0, 0.8, 0.2, 0.6});

} // namespace

TEST_CASE("y-values of exact polylines") {
    SUBCASE("single tent") {
        const LandscapePolyline p{{1, 2, 3}, {0, 1, 0}};
        CHECK(plgate::get_y_values(p) == std::vector<double>{1, 3});
    }
    SUBCASE("zero polyline") {
        CHECK(plgate::get_y_values(LandscapePolyline{{0, 1, 2}, {0, 0, 0}}).empty());
        CHECK(plgate::get_y_values(LandscapePolyline{}).empty());
    }
    SUBCASE("first level of two overlapping tents") {
        const LandscapePolyline p{{1, 2.5, 3, 3.5, 5}, {0, 1.5, 1, 1.5, 0}};
        CHECK(plgate::get_y_values(p) == std::vector<double>{1, 4, 2, 5});
        const auto exact = plgate::exact_level(diagram({{1, 4}, {2, 5}}), 1);
        CHECK(plgate::get_y_values(exact) == std::vector<double>{1, 4, 2, 5});
    }
    SUBCASE("second level of the same pair") {
        const auto exact = plgate::exact_level(diagram({{1, 4}, {2, 5}}), 2);
        CHECK(plgate::get_y_values(exact) == std::vector<double>{2, 4});
        CHECK(plgate::exact_level(diagram({{1, 4}, {2, 5}}), 3).size() == 0);
    }
    SUBCASE("touchdown followed by a gap and a second tent") {
        const LandscapePolyline p{{0, 1, 2, 3, 4, 5}, {0, 1, 0, 0, 1, 0}};
        CHECK(plgate::get_y_values(p) == std::vector<double>{0, 2, 3, 5});
    }
    SUBCASE("leading extremum counts as a take-off") {
        const LandscapePolyline p{{0, 1, 2}, {1, 0.5, 1}};
        // Not a valid landscape; the scan must still be total.
        CHECK_NOTHROW(plgate::get_y_values(p));
    }
}

TEST_CASE("y-values from a sampled grid") {
    const auto d = diagram({{0.213, 0.777}, {0.402, 0.951}});
    const plgate::LandscapeGrid grid{0, 1, 1001};
    const auto ls = plgate::landscape_stack(d, grid, 2);
    const auto ys = plgate::get_y_values(plgate::sampled_level(ls, 1), {.refine = true});
    const std::vector<double> want{0.213, 0.777, 0.402, 0.951};
    REQUIRE(ys.size() == want.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        CHECK(std::abs(ys[i] - want[i]) < 1e-9);
    }
    // Without refinement each vertex is off by up to one spacing and the
    // 2 t - previous recursion adds the errors up; near-equal values that
    // no longer deduplicate may appear.
    const auto coarse = plgate::get_y_values(plgate::sampled_level(ls, 1));
    auto near = [&](const std::vector<double>& from, const std::vector<double>& to) {
        return std::all_of(from.begin(), from.end(), [&](double a) {
            return std::any_of(to.begin(), to.end(), [&](double b) { return std::abs(a - b) <= 4 * grid.spacing(); });
        });
    };
    CHECK(near(coarse, want));
    CHECK(near(want, coarse));
}

TEST_CASE("x-values") {
    CHECK(plgate::get_x_values(std::vector<double>{0.2, 0.8}, kZigzag) == std::vector<double>{4, 3});
    CHECK(plgate::get_x_values(std::vector<double>{0.5}, kZigzag).empty());
    // 0.5 is hit only at a monotone sample.
    CHECK(plgate::get_x_values(std::vector<double>{0.5}, Signal({0, 0.5, 1})).empty());
    // Every matching extremum is kept.
    CHECK(plgate::get_x_values(std::vector<double>{0.3}, Signal({0, 0.3, 0.1, 0.3, 0})) ==
          std::vector<double>{1, 3});
    // The threshold is on the squared difference.
    CHECK(plgate::get_x_values(std::vector<double>{0.809}, kZigzag) == std::vector<double>{3});
    CHECK(plgate::get_x_values(std::vector<double>{0.811}, kZigzag).empty());
}

TEST_CASE("reconstruction from every level is the original") {
    const auto d = plgate::sublevel_diagram(kZigzag);
    const auto r = plgate::reconstruct_from_levels(kZigzag, all_levels(d));
    CHECK(r.points == plgate::critical_points(kZigzag));
    CHECK(r.simplified.values == kZigzag.values);
}

TEST_CASE("first-level reconstruction agrees with the envelope oracle") {
    // A tent shows up in lambda_1 exactly when nothing covers its peak, and
    // then contributes its birth and death.
    auto envelope_values = [](const std::vector<std::pair<double, double>>& pairs) {
        std::vector<double> ys;
        for (const auto& [b, d] : pairs) {
            const double mid = 0.5 * (b + d);
            if (oracle::kth_tent(pairs, 1, mid) == oracle::tent(b, d, mid)) {
                ys.push_back(b);
                ys.push_back(d);
            }
        }
        return ys;
    };
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 500; ++trial) {
        const auto v = oracle::separated_values(3 + trial % 18, 1e-6, rng);
        const Signal s = plgate::standardize(Signal(v));
        const auto [pairs, essential] = oracle::sweep_diagram(s.values);
        if (pairs.empty()) {
            continue;
        }
        const auto ys = envelope_values(pairs);
        const auto got = plgate::get_y_values(plgate::exact_level(plgate::sublevel_diagram(s), 1));
        REQUIRE(got.size() == ys.size());
        for (const double y : ys) {
            CHECK(std::any_of(got.begin(), got.end(), [&](double g) { return std::abs(g - y) < 1e-12; }));
        }

        std::set<double> want{0.0, static_cast<double>(s.size() - 1)};
        for (const auto& c : oracle::strict_extrema(s.values)) {
            const bool matched = std::any_of(ys.begin(), ys.end(),
                                             [&](double y) { return (c.y - y) * (c.y - y) < 1e-4; });
            if (matched || c.y == essential) {
                want.insert(c.x);
            }
        }
        const std::vector<std::size_t> first{1};
        CHECK(xs_of(plgate::reconstruct_from_levels(s, first)) == want);
    }
}

TEST_CASE("round trip on random signals") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 300; ++trial) {
        const Signal s = plgate::standardize(Signal(oracle::distinct_values(3 + trial % 18, rng)));
        const auto d = plgate::sublevel_diagram(s);
        if (d.pairs.empty()) {
            continue;
        }
        const auto r = plgate::reconstruct_from_levels(s, all_levels(d));
        CHECK(r.points == plgate::critical_points(s));
        CHECK(plgate::sublevel_diagram(r.simplified).same_values(d));
    }
}

TEST_CASE("y-values of every level are births or deaths") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 300; ++trial) {
        const Signal s(oracle::distinct_values(4 + trial % 25, rng));
        const auto d = plgate::sublevel_diagram(s);
        for (std::size_t k = 1; k <= d.pairs.size(); ++k) {
            for (const double y : plgate::get_y_values(plgate::exact_level(d, k))) {
                const bool found = std::any_of(d.pairs.begin(), d.pairs.end(), [&](const auto& p) {
                    return std::abs(p.birth - y) < 1e-9 || std::abs(p.death - y) < 1e-9;
                });
                CHECK(found);
            }
        }
    }
}

TEST_CASE("more levels never lose points") {
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 300; ++trial) {
        const Signal s = plgate::standardize(Signal(oracle::distinct_values(6 + trial % 25, rng)));
        const auto d = plgate::sublevel_diagram(s);
        if (d.pairs.empty()) {
            continue;
        }
        std::vector<std::size_t> levels;
        std::set<double> prev;
        for (std::size_t k = 1; k <= std::min<std::size_t>(d.pairs.size(), 5); ++k) {
            levels.push_back(k);
            const auto r = plgate::reconstruct_from_levels(s, levels);
            const auto xs = xs_of(r);
            CHECK(std::includes(xs.begin(), xs.end(), prev.begin(), prev.end()));
            for (std::size_t i = 1; i < r.points.size(); ++i) {
                CHECK(r.points[i].x > r.points[i - 1].x);
            }
            prev = xs;
        }
    }
}

TEST_CASE("reconstruction needs something to match") {
    const Signal flat({0.0, 0.0, 0.0});
    const std::vector<std::size_t> first{1};
    CHECK_THROWS_AS(plgate::reconstruct_from_levels(flat, first), plgate::Error);
    const std::vector<LandscapePolyline> far{{{0.5, 0.52, 0.54}, {0, 0.02, 0}}};
    CHECK_THROWS_AS(plgate::reconstruct(far, kZigzag), plgate::Error);
}

TEST_CASE("resample and JSON") {
    const std::vector<plgate::CriticalPoint> pts{{0, 0, plgate::ExtremumKind::minimum},
                                                 {2, 1, plgate::ExtremumKind::maximum},
                                                 {4, 0.5, plgate::ExtremumKind::minimum}};
    CHECK(plgate::resample(pts, 5).values == std::vector<double>{0, 0.5, 1, 0.75, 0.5});
    CHECK_THROWS_AS(plgate::resample({}, 3), plgate::Error);

    const auto d = plgate::sublevel_diagram(kZigzag);
    const nlohmann::json j = plgate::reconstruct_from_levels(kZigzag, all_levels(d));
    CHECK(j.at("points").size() == 6);
    CHECK(j.at("points")[0].at("kind") == "min");
    CHECK(j.at("simplified").size() == 6);
}

TEST_CASE("grid threshold") {
    CHECK(plgate::grid_match_threshold(1e-3) == plgate::kMatchThreshold);
    CHECK(plgate::grid_match_threshold(0.1) == doctest::Approx(0.01));
}
