#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "plgate/landscape.hpp"

namespace plgate {

enum class SelectionRule { largest_significant_drop, mass_majority };

std::string_view to_string(SelectionRule r) noexcept;

struct SelectionResult {
    /// 1-based level indices {1, ..., cut_index - 1}.
    std::vector<std::size_t> selected;
    /// First level left out (K + 1 when every level is kept).
    std::size_t cut_index = 0;
    SelectionRule rule_fired = SelectionRule::largest_significant_drop;
    std::vector<double> weights_used;
};

/// 1-based indices k in 2..K with w_k < w_{k-1} / 2.
std::vector<std::size_t> significant_drops(std::span<const double> weights);

/// Picks a prefix of levels from gate weights. If some significant drop k has
/// w_{k-1} > 0.1 the cut is the largest such k. Otherwise the cut is the
/// smallest k with w_1 + ... + w_{k-1} > w_k + ... + w_K, scanning from k = 2
/// so that at least one level is kept.
SelectionResult select_levels(std::span<const double> weights);

/// Keeps only the selected rows, in selection order, on the same grid.
LandscapeStack restrict_stack(const LandscapeStack& ls, const SelectionResult& sel);

void to_json(nlohmann::json& j, const SelectionResult& s);
void from_json(const nlohmann::json& j, SelectionResult& s);

} // namespace plgate
