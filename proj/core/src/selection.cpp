#include "plgate/selection.hpp"

#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "plgate/error.hpp"

namespace plgate {

std::string_view to_string(SelectionRule r) noexcept {
    switch (r) {
    case SelectionRule::largest_significant_drop:
        return "largest_significant_drop";
    case SelectionRule::mass_majority:
        return "mass_majority";
    }
    return "unknown";
}

std::vector<std::size_t> significant_drops(std::span<const double> weights) {
    std::vector<std::size_t> out;
    for (std::size_t k = 2; k <= weights.size(); ++k) {
        if (weights[k - 1] < 0.5 * weights[k - 2]) {
            out.push_back(k);
        }
    }
    return out;
}

SelectionResult select_levels(std::span<const double> weights) {
    const std::size_t K = weights.size();
    if (K < 2) {
        throw Error("level selection needs at least 2 weights, got " + std::to_string(K));
    }
    SelectionResult out;
    out.weights_used.assign(weights.begin(), weights.end());

    std::size_t cut = 0;
    for (const std::size_t k : significant_drops(weights)) {
        if (weights[k - 2] > 0.1) {
            cut = k;
        }
    }
    if (cut != 0) {
        out.rule_fired = SelectionRule::largest_significant_drop;
    } else {
        out.rule_fired = SelectionRule::mass_majority;
        cut = K + 1;
        for (std::size_t k = 2; k <= K; ++k) {
            const auto split = weights.begin() + static_cast<std::ptrdiff_t>(k - 1);
            const double head = std::accumulate(weights.begin(), split, 0.0);
            const double tail = std::accumulate(split, weights.end(), 0.0);
            if (head > tail) {
                cut = k;
                break;
            }
        }
    }
    out.cut_index = cut;
    out.selected.resize(cut - 1);
    std::iota(out.selected.begin(), out.selected.end(), std::size_t{1});
    return out;
}

LandscapeStack restrict_stack(const LandscapeStack& ls, const SelectionResult& sel) {
    if (sel.selected.empty()) {
        throw Error("selection is empty");
    }
    LandscapeStack out(sel.selected.size(), ls.grid(), ls.normalized());
    for (std::size_t r = 0; r < sel.selected.size(); ++r) {
        const std::size_t k = sel.selected[r];
        if (k == 0 || k > ls.levels()) {
            throw Error("selected level " + std::to_string(k) + " outside 1.." + std::to_string(ls.levels()));
        }
        const auto src = ls.row(k - 1);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

void to_json(nlohmann::json& j, const SelectionResult& s) {
    j = nlohmann::json{{"selected", s.selected},
                       {"cut_index", s.cut_index},
                       {"rule_fired", std::string(to_string(s.rule_fired))},
                       {"weights_used", s.weights_used}};
}

void from_json(const nlohmann::json& j, SelectionResult& s) {
    s = {};
    s.selected = j.at("selected").get<std::vector<std::size_t>>();
    s.cut_index = j.value("cut_index", s.selected.size() + 1);
    const auto rule = j.value("rule_fired", std::string("largest_significant_drop"));
    if (rule == "largest_significant_drop") {
        s.rule_fired = SelectionRule::largest_significant_drop;
    } else if (rule == "mass_majority") {
        s.rule_fired = SelectionRule::mass_majority;
    } else {
        throw Error("unknown selection rule '" + rule + "'");
    }
    s.weights_used = j.value("weights_used", std::vector<double>{});
    if (s.selected.empty()) {
        throw Error("selection lists no levels");
    }
}

} // namespace plgate
