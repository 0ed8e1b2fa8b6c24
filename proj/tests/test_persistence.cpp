#include <doctest/doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "plgate/persistence.hpp"
#include "plgate/signal.hpp"

using plgate::Signal;
using Pairs = std::vector<std::pair<double, double>>;

TEST_CASE("diagrams of small signals") {
    const auto a = plgate::sublevel_diagram(Signal({1, 3, 0, 2}));
    CHECK(a.sorted_values() == Pairs{{1, 3}});
    CHECK(a.essential_birth == 0);

    const auto b = plgate::sublevel_diagram(Signal({2, 5, 0, 4, 1, 3}));
    CHECK(b.sorted_values() == Pairs{{1, 4}, {2, 5}});
    CHECK(b.essential_birth == 0);

    const auto c = plgate::sublevel_diagram(Signal({0, 1}));
    CHECK(c.pairs.empty());
    CHECK(c.essential_birth == 0);
}

TEST_CASE("pair indices point at the birth minimum and the merge sample") {
    const auto d = plgate::sublevel_diagram(Signal({2, 5, 0, 4, 1, 3}));
    for (const auto& p : d.pairs) {
        if (p.birth == 1) {
            CHECK(p.birth_index == 4);
            CHECK(p.death_index == 3);
        } else {
            CHECK(p.birth_index == 0);
            CHECK(p.death_index == 1);
        }
    }
}

TEST_CASE("ties and plateaus") {
    SUBCASE("equal births: the left minimum is elder") {
        const auto d = plgate::sublevel_diagram(Signal({0, 2, 0}));
        REQUIRE(d.pairs.size() == 1);
        CHECK(d.pairs[0].birth_index == 2);
        CHECK(d.pairs[0].birth == 0);
        CHECK(d.pairs[0].death == 2);
    }
    SUBCASE("plateau minimum is born once") {
        const auto d = plgate::sublevel_diagram(Signal({3, 1, 1, 1, 4, 0}));
        CHECK(d.sorted_values() == Pairs{{1, 4}});
    }
    SUBCASE("zero-length bars are dropped") {
        // Index 2 starts a component at 1 that index 3 merges at 1.
        const auto d = plgate::sublevel_diagram(Signal({0, 2, 1, 1, 0}));
        CHECK(d.sorted_values() == Pairs{{0, 2}});
        const auto flat = plgate::sublevel_diagram(Signal({1, 1, 1}));
        CHECK(flat.pairs.empty());
        CHECK(flat.essential_birth == 1);
    }
}

TEST_CASE("sublevel diagram equals the threshold-sweep oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto v = oracle::distinct_values(2 + trial % 11, rng);
        const auto d = plgate::sublevel_diagram(Signal(v));
        const auto [pairs, essential] = oracle::sweep_diagram(v);
        REQUIRE(d.sorted_values() == pairs);
        CHECK(d.essential_birth == essential);
    }
}

TEST_CASE("pair count is minima minus one for distinct values") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 500; ++trial) {
        const auto v = oracle::distinct_values(2 + trial % 40, rng);
        const auto crit = plgate::critical_points(Signal(v));
        const auto minima = std::count_if(crit.begin(), crit.end(),
                                          [](const auto& c) { return c.kind == plgate::ExtremumKind::minimum; });
        CHECK(plgate::sublevel_diagram(Signal(v)).pairs.size() == static_cast<std::size_t>(minima - 1));
    }
}

TEST_CASE("births sit at minima and deaths at maxima") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        const auto v = oracle::distinct_values(3 + trial % 30, rng);
        const auto crit = plgate::critical_points(Signal(v));
        auto has = [&](std::size_t i, plgate::ExtremumKind k) {
            return std::any_of(crit.begin(), crit.end(), [&](const auto& c) {
                return c.x == static_cast<double>(i) && c.kind == k;
            });
        };
        for (const auto& p : plgate::sublevel_diagram(Signal(v)).pairs) {
            CHECK(has(p.birth_index, plgate::ExtremumKind::minimum));
            CHECK(has(p.death_index, plgate::ExtremumKind::maximum));
            CHECK(v[p.birth_index] == p.birth);
            CHECK(v[p.death_index] == p.death);
            CHECK(p.death > p.birth);
        }
    }
}

TEST_CASE("padding with the endpoint value leaves the pairs unchanged") {
    std::mt19937_64 rng(24);
    std::uniform_int_distribution<int> pad(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto v = oracle::distinct_values(2 + trial % 25, rng);
        std::vector<double> padded(static_cast<std::size_t>(pad(rng)), v.front());
        padded.insert(padded.end(), v.begin(), v.end());
        padded.insert(padded.end(), static_cast<std::size_t>(pad(rng)), v.back());
        const auto a = plgate::sublevel_diagram(Signal(v));
        const auto b = plgate::sublevel_diagram(Signal(padded));
        CHECK(a.same_values(b));
    }
}

TEST_CASE("small perturbations move births and deaths by at most epsilon") {
    std::mt19937_64 rng(25);
    constexpr double eps = 1e-7;
    std::uniform_real_distribution<double> jitter(-eps, eps);
    for (int trial = 0; trial < 500; ++trial) {
        // Gaps of 1e-3 keep the combinatorics fixed under the jitter.
        const auto v = oracle::separated_values(2 + trial % 30, 1e-3, rng);
        auto w = v;
        for (auto& x : w) {
            x += jitter(rng);
        }
        const auto a = plgate::sublevel_diagram(Signal(v));
        const auto b = plgate::sublevel_diagram(Signal(w));
        REQUIRE(a.pairs.size() == b.pairs.size());
        for (const auto& p : a.pairs) {
            const auto q = std::find_if(b.pairs.begin(), b.pairs.end(), [&](const auto& q) {
                return q.birth_index == p.birth_index && q.death_index == p.death_index;
            });
            REQUIRE(q != b.pairs.end());
            CHECK(std::abs(q->birth - p.birth) <= eps);
            CHECK(std::abs(q->death - p.death) <= eps);
        }
    }
}

TEST_CASE("diagram JSON round trip") {
    const auto d = plgate::sublevel_diagram(Signal({2, 5, 0, 4, 1, 3}));
    const nlohmann::json j = d;
    CHECK(j.at("pairs").size() == 2);
    CHECK(j.at("essential_birth") == 0.0);
    const auto back = j.get<plgate::PersistenceDiagram>();
    CHECK(back.same_values(d));
}
