#include "plgate/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "plgate/error.hpp"

namespace plgate {

namespace fs = std::filesystem;

std::vector<std::size_t> Dataset::class_histogram() const {
    std::vector<std::size_t> h(class_count, 0);
    for (const auto& s : signals) {
        if (s.label && *s.label >= 0 && static_cast<std::size_t>(*s.label) < class_count) {
            ++h[static_cast<std::size_t>(*s.label)];
        }
    }
    return h;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(signals.size());
    for (const auto& s : signals) {
        out.push_back(s.label.value_or(-1));
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t n = length();
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const auto& s = signals[i];
        if (s.size() != n) {
            throw Error(name + ": signal " + std::to_string(i) + " has length " + std::to_string(s.size()) +
                        ", expected " + std::to_string(n));
        }
        if (!s.label || *s.label < 0 || static_cast<std::size_t>(*s.label) >= class_count) {
            throw Error(name + ": signal " + std::to_string(i) + " has a label outside [0, " +
                        std::to_string(class_count) + ")");
        }
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Splits on tabs, commas or runs of blanks.
std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    const bool delimited = line.find_first_of(",\t") != std::string_view::npos;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        const bool at_end = i == line.size();
        const char c = at_end ? '\0' : line[i];
        const bool sep = delimited ? (c == ',' || c == '\t') : (c == ' ');
        if (at_end || sep) {
            auto field = trim(line.substr(start, i - start));
            if (delimited || !field.empty()) {
                out.push_back(field);
            }
            start = i + 1;
        }
    }
    return out;
}

double parse_number(std::string_view field, const std::string& where) {
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(where + ": '" + std::string(field) + "' is not a number");
    }
    if (!std::isfinite(v)) {
        throw Error(where + ": non-finite value");
    }
    return v;
}

struct RawRow {
    double label;
    std::vector<double> values;
};

/// Rows of (label, values...) or (values..., label).
std::vector<RawRow> read_rows(const fs::path& path, bool label_first, std::size_t expected_fields) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = expected_fields;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto fields = split_fields(body);
        const std::string where = path.filename().string() + " row " + std::to_string(line_no);
        if (width == 0) {
            width = fields.size();
        }
        if (fields.size() != width) {
            throw Error(where + ": expected " + std::to_string(width) + " columns, found " +
                        std::to_string(fields.size()));
        }
        if (width < 3) {
            throw Error(where + ": need a label and at least 2 values");
        }
        RawRow row;
        row.values.reserve(width - 1);
        for (std::size_t f = 0; f < width; ++f) {
            const double v = parse_number(fields[f], where);
            const bool is_label = label_first ? f == 0 : f + 1 == width;
            if (is_label) {
                if (v != std::round(v)) {
                    throw Error(where + ": unknown label " + std::string(fields[f]));
                }
                row.label = v;
            } else {
                row.values.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw Error(path.string() + " contains no rows");
    }
    return rows;
}

} // namespace

Dataset load_ucr(std::span<const fs::path> files, std::string name) {
    std::vector<RawRow> rows;
    for (const auto& f : files) {
        auto part = read_rows(f, true, rows.empty() ? 0 : rows.front().values.size() + 1);
        std::move(part.begin(), part.end(), std::back_inserter(rows));
    }
    if (rows.empty()) {
        throw Error("no UCR files given");
    }
    std::map<double, int> ids;
    for (const auto& r : rows) {
        ids.emplace(r.label, 0);
    }
    Dataset d;
    d.name = std::move(name);
    for (auto& [value, id] : ids) {
        id = static_cast<int>(d.label_values.size());
        d.label_values.push_back(value);
    }
    d.class_count = ids.size();
    d.signals.reserve(rows.size());
    for (auto& r : rows) {
        d.signals.push_back(standardize(Signal(std::move(r.values), ids.at(r.label))));
    }
    d.validate();
    return d;
}

Dataset load_ucr(const fs::path& path) {
    if (fs::is_regular_file(path)) {
        return load_ucr(std::span<const fs::path>(&path, 1), path.stem().string());
    }
    std::vector<fs::path> files;
    for (const char* part : {"_TRAIN", "_TEST"}) {
        for (const char* ext : {".tsv", ".csv", ".txt", ""}) {
            fs::path candidate = path;
            candidate += part;
            candidate += ext;
            if (fs::is_regular_file(candidate)) {
                files.push_back(candidate);
                break;
            }
        }
    }
    if (files.empty()) {
        throw Error("no UCR file at " + path.string() + " (nor _TRAIN/_TEST variants)");
    }
    return load_ucr(files, path.filename().string());
}

Dataset load_mitbih_csv(const fs::path& path) {
    auto rows = read_rows(path, false, kMitBihBeatLength + 1);
    Dataset d;
    d.name = path.stem().string();
    d.class_count = kMitBihClasses;
    for (std::size_t c = 0; c < kMitBihClasses; ++c) {
        d.label_values.push_back(static_cast<double>(c));
    }
    d.signals.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double lbl = rows[i].label;
        if (lbl < 0 || lbl >= static_cast<double>(kMitBihClasses)) {
            throw Error(path.filename().string() + " data row " + std::to_string(i + 1) + ": unknown label " +
                        std::to_string(lbl));
        }
        d.signals.push_back(standardize(Signal(std::move(rows[i].values), static_cast<int>(lbl))));
    }
    return d;
}

Dataset shift_augment(const Dataset& d, std::size_t target_length, std::uint64_t seed) {
    const std::size_t n = d.length();
    if (target_length < n) {
        throw Error("shift target length " + std::to_string(target_length) + " is shorter than signals (" +
                    std::to_string(n) + ")");
    }
    const std::size_t pad = target_length - n;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> front_of(0, pad);
    Dataset out = d;
    out.name = d.name + "_shift" + std::to_string(target_length);
    for (auto& s : out.signals) {
        const std::size_t front = front_of(rng);
        std::vector<double> v(target_length, 0.0);
        std::copy(s.values.begin(), s.values.end(), v.begin() + static_cast<std::ptrdiff_t>(front));
        s.values = std::move(v);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_members(std::span<const int> labels, std::size_t class_count,
                                                       std::mt19937_64& rng) {
    std::vector<std::vector<std::size_t>> members(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
            throw Error("sample " + std::to_string(i) + " has a label outside [0, " + std::to_string(class_count) +
                        ")");
        }
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (auto& m : members) {
        std::shuffle(m.begin(), m.end(), rng);
    }
    return members;
}

} // namespace

FoldPlan make_folds(std::span<const int> labels, std::size_t class_count, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) {
        throw Error("cross-validation needs at least 2 folds");
    }
    FoldPlan plan;
    plan.folds = folds;
    plan.seed = seed;
    plan.fold_of.assign(labels.size(), 0);
    std::mt19937_64 rng(seed);
    const auto members = shuffled_members(labels, class_count, rng);
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto n = members[c].size();
        if (n > 0 && n < folds) {
            throw Error("class " + std::to_string(c) + " has " + std::to_string(n) + " samples, fewer than " +
                        std::to_string(folds) + " folds");
        }
    }
    std::size_t offset = 0;
    for (const auto& m : members) {
        for (std::size_t p = 0; p < m.size(); ++p) {
            plan.fold_of[m[p]] = (offset + p) % folds;
        }
        offset += m.size();
    }
    return plan;
}

FoldPlan make_folds(const Dataset& d, std::size_t folds, std::uint64_t seed) {
    d.validate();
    const auto labels = d.labels();
    return make_folds(labels, d.class_count, folds, seed);
}

FoldPlan make_holdout(std::span<const int> labels, std::size_t class_count, double train_fraction,
                      std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("train fraction must lie in (0, 1)");
    }
    FoldPlan plan;
    plan.folds = 2;
    plan.seed = seed;
    plan.fold_of.assign(labels.size(), 0);
    std::mt19937_64 rng(seed);
    for (const auto& m : shuffled_members(labels, class_count, rng)) {
        const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(m.size())));
        for (std::size_t p = 0; p < m.size(); ++p) {
            plan.fold_of[m[p]] = p < n_train ? 1 : 0;
        }
    }
    return plan;
}

FoldPlan make_holdout(const Dataset& d, double train_fraction, std::uint64_t seed) {
    d.validate();
    const auto labels = d.labels();
    return make_holdout(labels, d.class_count, train_fraction, seed);
}

} // namespace plgate
