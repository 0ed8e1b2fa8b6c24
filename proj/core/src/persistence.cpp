#include "plgate/persistence.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "plgate/error.hpp"

namespace plgate {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), birth_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
        std::iota(birth_.begin(), birth_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Index of the minimum that created the component rooted at `root`.
    std::size_t birth_of(std::size_t root) const { return birth_[root]; }

    void attach(std::size_t child_root, std::size_t parent_root) { parent_[child_root] = parent_root; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> birth_;
};

} // namespace

PersistenceDiagram sublevel_diagram(const Signal& s) {
    validate(s);
    const auto& v = s.values;
    const std::size_t n = v.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    // Elder component first: lower birth value, then smaller birth index.
    auto elder = [&](std::size_t a, std::size_t b) {
        return v[a] < v[b] || (v[a] == v[b] && a < b);
    };

    UnionFind uf(n);
    std::vector<char> active(n, 0);
    PersistenceDiagram out;
    out.essential_birth = v[order.front()];

    for (const std::size_t i : order) {
        active[i] = 1;
        std::size_t root = i;
        bool joined = false;
        for (const std::size_t nb : {i - 1, i + 1}) {
            // i - 1 wraps around for i == 0 and fails the bound check
            if (nb >= n || !active[nb]) {
                continue;
            }
            const std::size_t other = uf.find(nb);
            if (!joined) {
                uf.attach(i, other);
                root = other;
                joined = true;
                continue;
            }
            if (other == root) {
                continue;
            }
            const bool other_is_elder = elder(uf.birth_of(other), uf.birth_of(root));
            const std::size_t survivor = other_is_elder ? other : root;
            const std::size_t victim = other_is_elder ? root : other;
            const std::size_t victim_birth = uf.birth_of(victim);
            if (v[i] > v[victim_birth]) {
                out.pairs.push_back({v[victim_birth], v[i], victim_birth, i});
            }
            uf.attach(victim, survivor);
            root = survivor;
        }
    }
    return out;
}

std::vector<std::pair<double, double>> PersistenceDiagram::sorted_values() const {
    std::vector<std::pair<double, double>> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.emplace_back(p.birth, p.death);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool PersistenceDiagram::same_values(const PersistenceDiagram& other) const {
    return essential_birth == other.essential_birth && sorted_values() == other.sorted_values();
}

void to_json(nlohmann::json& j, const PersistenceDiagram& d) {
    auto pairs = nlohmann::json::array();
    for (const auto& p : d.pairs) {
        pairs.push_back({p.birth, p.death});
    }
    j = nlohmann::json{{"pairs", std::move(pairs)}, {"essential_birth", d.essential_birth}};
}

void from_json(const nlohmann::json& j, PersistenceDiagram& d) {
    d = {};
    d.essential_birth = j.at("essential_birth").get<double>();
    for (const auto& p : j.at("pairs")) {
        if (!p.is_array() || p.size() != 2) {
            throw Error("diagram pair must be a [birth, death] array");
        }
        d.pairs.push_back({p[0].get<double>(), p[1].get<double>(), 0, 0});
    }
}

} // namespace plgate
