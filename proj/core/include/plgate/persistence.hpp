#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "plgate/signal.hpp"

namespace plgate {

/// A finite bar of the H0 sublevel barcode. The indices locate the local
/// minimum that created the component and the sample at which it merged.
struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
    std::size_t birth_index = 0;
    std::size_t death_index = 0;

    double persistence() const noexcept { return death - birth; }
};

struct PersistenceDiagram {
    std::vector<PersistencePair> pairs;
    /// Birth of the component that never dies (the global minimum value).
    double essential_birth = 0.0;

    /// (birth, death) values sorted lexicographically; indices are dropped.
    std::vector<std::pair<double, double>> sorted_values() const;

    /// Compares the multisets of (birth, death) values and the essential birth.
    bool same_values(const PersistenceDiagram& other) const;
};

/// Zero-dimensional persistence of the sublevel filtration of the PL
/// interpolation of `s`, via one union-find sweep over value-sorted samples.
///
/// Equal values are swept in increasing index order. When two components
/// meet, the one with the larger birth dies; equal births are broken in
/// favour of the component whose minimum has the smaller index. Bars of zero
/// length are dropped.
PersistenceDiagram sublevel_diagram(const Signal& s);

void to_json(nlohmann::json& j, const PersistenceDiagram& d);
void from_json(const nlohmann::json& j, PersistenceDiagram& d);

} // namespace plgate
