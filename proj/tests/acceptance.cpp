// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes or fails only because its
// dataset is absent ("blocked"); any other failure exits 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "plgate/dataset.hpp"
#include "plgate/io.hpp"
#include "plgate/landscape.hpp"
#include "plgate/model.hpp"
#include "plgate/persistence.hpp"
#include "plgate/reconstruction.hpp"
#include "plgate/selection.hpp"

namespace fs = std::filesystem;
using namespace plgate;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    bool blocked = false; ///< failed only because input data is missing
};

struct Options {
    std::string data_dir = PLGATE_DATA_DIR;
    std::vector<int> only;
    std::size_t epochs = 40;
    std::size_t lr_drop_every = 17;
    std::size_t mitbih_epochs = 20;
    std::size_t mitbih_lr_drop_every = 8;
    std::uint64_t seed = 1;
    std::string precision = "f32";
    unsigned threads = 1;
    std::string json;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string pct_sd(const FitReport& r) { return fmt("%.2f", 100.0 * r.mean) + " +- " + fmt("%.2f", 100.0 * r.std); }

TrainConfig budget(const Options& o, bool mitbih = false) {
    TrainConfig t;
    t.epochs = mitbih ? o.mitbih_epochs : o.epochs;
    t.lr_drop_every = mitbih ? o.mitbih_lr_drop_every : o.lr_drop_every;
    t.seed = o.seed;
    return t;
}

ModelConfig model_cfg(const Options& o, bool gating) {
    ModelConfig m;
    m.use_gating = gating;
    m.precision = o.precision == "f64" ? Precision::f64 : Precision::f32;
    return m;
}

void progress(const std::string& what) { std::cerr << "  .. " << what << std::endl; }

FitReport run(const std::string& what, const SampleSet& data, const ModelConfig& m, const TrainConfig& t) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = train(data, m, t, [&](const EpochLog& e) {
        if (e.epoch + 1 == t.epochs) {
            progress(what + " fold " + std::to_string(e.fold + 1) + " done, loss " + fmt("%.4f", e.mean_loss));
        }
    }).report;
    progress(what + ": " + pct_sd(r) + " in " +
             fmt("%.0f s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
    return r;
}

// --- 1 ---------------------------------------------------------------------

Outcome persistence_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> len(2, 12);
    std::size_t mismatches = 0;
    std::size_t pairs = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto v = oracle::distinct_values(len(rng), rng);
        const auto got = sublevel_diagram(Signal(v));
        const auto [want, essential] = oracle::sweep_diagram(v);
        pairs += want.size();
        if (got.sorted_values() != want || got.essential_birth != essential) {
            ++mismatches;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mismatches == 0 && secs < 30.0,
            "10000 signals (n <= 12), " + std::to_string(pairs) + " pairs, " + std::to_string(mismatches) +
                " mismatches, " + fmt("%.2f s", secs) + " (limit 30 s)"};
}

// --- 2 ---------------------------------------------------------------------

Outcome landscape_oracle() {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 6);
    const LandscapeGrid grid{0.0, 1.0, 100};
    double worst = 0.0;
    std::size_t order_violations = 0;
    std::size_t area_violations = 0;
    std::size_t nonzero_rows = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        PersistenceDiagram d;
        std::vector<std::pair<double, double>> bd;
        for (int p = count(rng); p > 0; --p) {
            double b = u(rng);
            double e = u(rng);
            if (b > e) {
                std::swap(b, e);
            }
            d.pairs.push_back({b, e, 0, 0});
            bd.emplace_back(b, e);
        }
        const auto ls = landscape_stack(d, grid, 10);
        for (std::size_t k = 0; k < 10; ++k) {
            for (std::size_t j = 0; j < grid.m; ++j) {
                worst = std::max(worst, std::abs(ls.at(k, j) - oracle::kth_tent(bd, k + 1, grid.at(j))));
                if (k + 1 < 10 && ls.at(k, j) < ls.at(k + 1, j)) {
                    ++order_violations;
                }
            }
        }
        const auto norm = normalize_area(ls);
        for (std::size_t k = 0; k < 10; ++k) {
            if (trapezoid_area(ls.row(k), grid.spacing()) > 0.0) {
                ++nonzero_rows;
                if (std::abs(trapezoid_area(norm.row(k), grid.spacing()) - 1.0) > 1e-9) {
                    ++area_violations;
                }
            }
        }
    }
    return {worst <= 1e-12 && order_violations == 0 && area_violations == 0,
            "1000 diagrams (<= 6 pairs): max |stack - oracle| " + fmt("%.1e", worst) + ", " +
                std::to_string(order_violations) + " ordering violations, " + std::to_string(area_violations) + " of " +
                std::to_string(nonzero_rows) + " normalized rows off unit area"};
}

// --- 3 ---------------------------------------------------------------------

Outcome gradient_check() {
    std::mt19937_64 rng(103);
    ModelConfig cfg;
    cfg.rows = 3;
    cfg.cols = 8;
    cfg.num_classes = 2;
    cfg.seed = 3;
    GatedModel m(cfg);
    // Large enough that no ReLU or pool sits within the difference step of a
    // kink; at 0.05 one hidden unit lands there and the check measures the kink.
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    m.params().for_each([&](const char*, std::span<double> p) {
        for (auto& x : p) {
            x += jitter(rng);
        }
    });
    SampleSet s;
    s.rows = 3;
    s.cols = 8;
    s.num_classes = 2;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 24; ++j) {
            s.values.push_back(u(rng));
        }
        s.labels.push_back(i % 2);
    }
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const auto errors = oracle::gradient_errors(m, Batch::gather(s, idx), 1e-5);
    double worst = 0.0;
    std::string which;
    for (const auto& [name, err] : errors) {
        if (err >= worst) {
            worst = err;
            which = name;
        }
    }
    return {worst < 1e-4, std::to_string(errors.size()) + " parameter groups (K=3, m=8, 2 classes, " +
                              std::to_string(m.params().count()) + " parameters), worst relative error " +
                              fmt("%.1e", worst) + " in " + which + " (limit 1e-4)"};
}

// --- 4 ---------------------------------------------------------------------

Outcome reconstruction_round_trip() {
    std::mt19937_64 rng(104);
    std::uniform_int_distribution<std::size_t> len(3, 20);
    std::size_t lost_points = 0;
    std::size_t diagram_changes = 0;
    std::size_t signals = 0;
    std::size_t points = 0;
    while (signals < 1000) {
        const Signal s(oracle::distinct_values(len(rng), rng));
        const auto diagram = sublevel_diagram(s);
        if (diagram.pairs.empty()) {
            continue; // monotone: no level to reconstruct from
        }
        ++signals;
        std::vector<std::size_t> all(diagram.pairs.size());
        for (std::size_t k = 0; k < all.size(); ++k) {
            all[k] = k + 1;
        }
        const auto rec = reconstruct_from_levels(s, all);
        const auto crit = critical_points(s);
        points += crit.size();
        std::set<std::pair<double, double>> got;
        for (const auto& p : rec.points) {
            got.emplace(p.x, p.y);
        }
        for (const auto& c : crit) {
            lost_points += got.count({c.x, c.y}) == 0;
        }
        if (got.size() != crit.size() || !sublevel_diagram(rec.simplified).same_values(diagram)) {
            ++diagram_changes;
        }
    }
    return {lost_points == 0 && diagram_changes == 0,
            "1000 signals (n <= 20): " + std::to_string(lost_points) + " of " + std::to_string(points) +
                " critical points missed, " + std::to_string(diagram_changes) + " diagrams changed"};
}

// --- 5 ---------------------------------------------------------------------

Outcome selection_suite() {
    struct Example {
        std::vector<double> w;
        std::vector<std::size_t> selected;
        std::size_t cut;
        SelectionRule rule;
    };
    std::vector<double> third(10, 0.29);
    third[0] = 0.8;
    third[1] = 0.3;
    const std::vector<Example> examples{
        {{0.9, 0.7, 0.3, 0.1, 0.05, 0.04, 0.04, 0.03, 0.03, 0.02}, {1, 2, 3}, 4, SelectionRule::largest_significant_drop},
        {std::vector<double>(10, 0.5), {1, 2, 3, 4, 5, 6}, 7, SelectionRule::mass_majority},
        {third, {1}, 2, SelectionRule::largest_significant_drop},
    };
    std::size_t wrong = 0;
    for (const auto& e : examples) {
        const auto r = select_levels(e.w);
        wrong += !(r.selected == e.selected && r.cut_index == e.cut && r.rule_fired == e.rule);
    }
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t bad = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        std::vector<double> w(10);
        for (auto& x : w) {
            do {
                x = u(rng);
            } while (x == 0.0);
        }
        const auto r = select_levels(w);
        bool prefix = !r.selected.empty() && r.cut_index == r.selected.size() + 1;
        for (std::size_t i = 0; prefix && i < r.selected.size(); ++i) {
            prefix = r.selected[i] == i + 1;
        }
        bad += !prefix;
    }
    return {wrong == 0 && bad == 0, std::to_string(3 - wrong) + " of 3 worked examples reproduced; " +
                                        std::to_string(bad) + " of 100000 fuzzed weight vectors without a nonempty prefix"};
}

// --- 6 ---------------------------------------------------------------------

Outcome shift_invariance() {
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<std::size_t> len(3, 60);
    std::uniform_int_distribution<std::size_t> extra(0, 60);
    Dataset d;
    d.name = "zero-ended";
    d.class_count = 1;
    for (int i = 0; i < 1000; ++i) {
        auto v = oracle::distinct_values(len(rng), rng);
        v.front() = 0.0;
        v.back() = 0.0;
        d.signals.emplace_back(standardize(Signal(v, 0)).values, 0);
    }
    std::size_t diagram_changes = 0;
    std::size_t stack_changes = 0;
    std::size_t output_changes = 0;
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.seed = 6;
    const GatedModel model(cfg);
    StackOptions opts;
    for (std::size_t i = 0; i < d.size(); ++i) {
        Dataset one;
        one.class_count = 1;
        one.signals = {d.signals[i]};
        const auto shifted = shift_augment(one, one.length() + extra(rng), 1000 + i);
        const auto a = sublevel_diagram(one.signals[0]);
        const auto b = sublevel_diagram(shifted.signals[0]);
        diagram_changes += a.sorted_values() != b.sorted_values();
        const auto sa = stack_dataset(one.signals, opts);
        const auto sb = stack_dataset(shifted.signals, opts);
        stack_changes += !(sa == sb);
        output_changes += forward(model, sa[0].data()) != forward(model, sb[0].data());
    }
    return {diagram_changes == 0 && stack_changes == 0 && output_changes == 0,
            "1000 zero-ended signals, random zero padding: " + std::to_string(diagram_changes) + " diagrams, " +
                std::to_string(stack_changes) + " stacks and " + std::to_string(output_changes) +
                " model outputs changed"};
}

// --- 7 ---------------------------------------------------------------------

struct Synthetic {
    Dataset data;
    // Knot values that fix lambda_1 and lambda_2.
    std::vector<std::array<double, 4>> bd;
};

/// Piecewise-linear signals on 100 samples through the knots
///   1, 0, d1, b1, 0.7, b2, (up to three shallow dips), 1.
/// The pairs are (b1, d1), (b2, 0.7) and one short pair per dip, all inside
/// (b2, 0.7), so lambda_1 is the (b1, d1) tent and lambda_2 the (b2, 0.7)
/// tent. Only b2 depends on the class: deeper for class 0.
Synthetic synthetic(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u(rng); };
    Synthetic out;
    out.data.name = "second-dip";
    out.data.class_count = 2;
    constexpr int len = 100;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double d1 = in(0.85, 0.95);
        const double b1 = in(0.05, 0.15);
        const double d2 = 0.7;
        const double b2 = label ? in(0.45, 0.55) : in(0.25, 0.35);
        std::vector<double> knots{1.0, 0.0, d1, b1, d2, b2};
        for (int dips = std::uniform_int_distribution<int>(0, 3)(rng); dips > 0; --dips) {
            const double low = in(0.56, 0.64);
            knots.push_back(low + in(0.01, 0.05));
            knots.push_back(low);
        }
        knots.push_back(1.0);

        // Knot positions: endpoints fixed, the rest distinct and >= 2 apart.
        const auto k = knots.size();
        std::vector<int> pos;
        for (bool ok = false; !ok;) {
            std::vector<int> cand(len - 2);
            for (int x = 0; x < len - 2; ++x) {
                cand[static_cast<std::size_t>(x)] = x + 1;
            }
            std::shuffle(cand.begin(), cand.end(), rng);
            cand.resize(k - 2);
            std::sort(cand.begin(), cand.end());
            pos = {0};
            pos.insert(pos.end(), cand.begin(), cand.end());
            pos.push_back(len - 1);
            ok = true;
            for (std::size_t j = 1; j < k; ++j) {
                ok = ok && pos[j] - pos[j - 1] >= 2;
            }
        }
        std::vector<double> v(len);
        for (std::size_t j = 0; j + 1 < k; ++j) {
            for (int x = pos[j]; x <= pos[j + 1]; ++x) {
                const double a = static_cast<double>(x - pos[j]) / (pos[j + 1] - pos[j]);
                v[static_cast<std::size_t>(x)] = knots[j] * (1.0 - a) + knots[j + 1] * a;
            }
        }
        out.data.signals.emplace_back(std::move(v), label);
        out.bd.push_back({b1, d1, b2, d2});
    }
    return out;
}

Outcome synthetic_attribution(const Options& o) {
    const auto syn = synthetic(1000, 107);
    // Construction oracle on the raw landscapes.
    const LandscapeGrid grid{};
    double worst = 0.0;
    for (std::size_t i = 0; i < syn.data.size(); ++i) {
        const auto ls = landscape_stack(sublevel_diagram(syn.data.signals[i]), grid, 10);
        const auto& [b1, d1, b2, d2] = syn.bd[i];
        for (std::size_t j = 0; j < grid.m; ++j) {
            worst = std::max(worst, std::abs(ls.at(0, j) - oracle::tent(b1, d1, grid.at(j))));
            worst = std::max(worst, std::abs(ls.at(1, j) - oracle::tent(b2, d2, grid.at(j))));
        }
    }
    const bool oracle_ok = worst <= 1e-12;
    if (!oracle_ok) {
        return {false, "construction oracle failed: lambda_1/lambda_2 off by " + fmt("%.1e", worst)};
    }

    StackFile f;
    f.stacks = stack_dataset(syn.data.signals, StackOptions{grid, 10, true, o.threads});
    f.labels = syn.data.labels();
    f.class_count = 2;
    const auto r = run("synthetic", SampleSet::from_stacks(f), model_cfg(o, true), budget(o));
    std::size_t top2 = 0;
    std::string ranks;
    for (const auto& g : r.fold_gates) {
        // Rank of the lambda_2 gate (1 = largest).
        const auto rank = 1 + std::count_if(g.begin(), g.end(), [&](double w) { return w > g[1]; });
        top2 += rank <= 2;
        ranks += (ranks.empty() ? "" : ",") + std::to_string(rank);
    }
    return {r.mean >= 0.95 && top2 >= 4,
            "oracle max error " + fmt("%.1e", worst) + "; accuracy " + pct_sd(r) + " (need >= 95); lambda_2 gate rank per fold {" +
                ranks + "}, top 2 in " + std::to_string(top2) + " of 5 folds (need >= 4)"};
}

// --- 8, 9 ------------------------------------------------------------------

struct EcgRuns {
    bool available = false;
    std::string missing;
    FitReport raw;
    FitReport full;
    FitReport selected;
    SelectionResult selection;
};

EcgRuns ecg5000(const Options& o, bool with_selected) {
    EcgRuns e;
    const fs::path dir = o.data_dir;
    const std::vector<fs::path> files{dir / "ECG5000_TRAIN.tsv", dir / "ECG5000_TEST.tsv"};
    for (const auto& f : files) {
        if (!fs::exists(f)) {
            e.missing = f.string() + " not found (run tools/fetch_datasets.py)";
            return e;
        }
    }
    e.available = true;
    const auto d = load_ucr(files, "ECG5000");
    e.raw = run("ECG5000 raw", SampleSet::from_signals(d), model_cfg(o, false), budget(o));
    StackFile f;
    f.stacks = stack_dataset(d.signals, StackOptions{{}, 10, true, o.threads});
    f.labels = d.labels();
    f.class_count = d.class_count;
    e.full = run("ECG5000 10 levels", SampleSet::from_stacks(f), model_cfg(o, true), budget(o));
    if (with_selected) {
        e.selection = select_levels(e.full.gating_mean);
        for (auto& s : f.stacks) {
            s = restrict_stack(s, e.selection);
        }
        e.selected = run("ECG5000 selected", SampleSet::from_stacks(f), model_cfg(o, e.selection.selected.size() > 1),
                         budget(o));
    }
    return e;
}

Outcome ecg_table(const EcgRuns& e) {
    if (!e.available) {
        return {false, e.missing, true};
    }
    const double gap = std::abs(e.raw.mean - e.full.mean);
    return {e.raw.mean >= 0.88 && e.full.mean >= 0.86 && gap <= 0.06,
            "raw " + pct_sd(e.raw) + " (need >= 88), normalized 10 levels " + pct_sd(e.full) + " (need >= 86), gap " +
                fmt("%.2f", 100.0 * gap) + " points (need <= 6)"};
}

Outcome ecg_selected(const EcgRuns& e) {
    if (!e.available) {
        return {false, e.missing, true};
    }
    std::string levels;
    for (const auto k : e.selection.selected) {
        levels += (levels.empty() ? "" : ",") + std::to_string(k);
    }
    const double gap = std::abs(e.selected.mean - e.full.mean);
    return {gap <= 0.02, "selected levels {" + levels + "} by " + std::string(to_string(e.selection.rule_fired)) +
                             ": " + pct_sd(e.selected) + " vs 10 levels " + pct_sd(e.full) + ", gap " +
                             fmt("%.2f", 100.0 * gap) + " points (need <= 2)"};
}

// --- 10 --------------------------------------------------------------------

std::size_t identical_stacks(const Dataset& d, const Dataset& shifted, unsigned threads) {
    const StackOptions opts{{}, 10, true, threads};
    const auto a = stack_dataset(d.signals, opts);
    const auto b = stack_dataset(shifted.signals, opts);
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same += a[i] == b[i];
    }
    return same;
}

Outcome shift_direction(const Options& o) {
    const fs::path file = fs::path(o.data_dir) / "mitbih_train.csv";
    if (!fs::exists(file)) {
        // Without the beats, still report how the invariance fares on the
        // ECG5000 signals, whose endpoints are generally not the pad value.
        std::string extra;
        const fs::path ecg = fs::path(o.data_dir) / "ECG5000_TRAIN.tsv";
        if (fs::exists(ecg)) {
            const auto d = load_ucr(ecg);
            const auto shifted = shift_augment(d, 2 * d.length(), o.seed);
            extra = "; stand-in check on ECG5000_TRAIN padded to " + std::to_string(2 * d.length()) + ": " +
                    std::to_string(identical_stacks(d, shifted, o.threads)) + " of " + std::to_string(d.size()) +
                    " stacks bit-identical";
        }
        return {false, file.string() + " not found (MIT-BIH beats are not redistributable here)" + extra, true};
    }
    const auto d = load_mitbih_csv(file);
    const auto shifted = shift_augment(d, 2 * kMitBihBeatLength, o.seed);
    const auto same = identical_stacks(d, shifted, o.threads);
    const auto raw = run("MIT-BIH raw", SampleSet::from_signals(d), model_cfg(o, false), budget(o, true));
    const auto raw_s = run("MIT-BIH raw, padded", SampleSet::from_signals(shifted), model_cfg(o, false), budget(o, true));
    return {raw_s.mean < raw.mean && same == d.size(),
            "raw " + pct_sd(raw) + " -> padded " + pct_sd(raw_s) + " (need a drop); " + std::to_string(same) + " of " +
                std::to_string(d.size()) + " landscape stacks bit-identical after padding (need all)"};
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    if (const char* env = std::getenv("PLGATE_DATA_DIR")) {
        o.data_dir = env;
    }
    CLI::App app{"Acceptance criteria: prints PASS or FAIL for each."};
    app.add_option("--data-dir", o.data_dir, "directory with ECG5000_*.tsv and mitbih_train.csv");
    app.add_option("--only", o.only, "run only these criteria");
    app.add_option("--epochs", o.epochs, "training epochs per fold for criteria 7 to 9");
    app.add_option("--lr-drop-every", o.lr_drop_every, "epochs between learning-rate drops for criteria 7 to 9");
    app.add_option("--mitbih-epochs", o.mitbih_epochs, "training epochs per fold for criterion 10");
    app.add_option("--mitbih-lr-drop-every", o.mitbih_lr_drop_every, "epochs between drops for criterion 10");
    app.add_option("--seed", o.seed, "root seed for the trained criteria");
    app.add_option("--precision", o.precision, "network arithmetic")->check(CLI::IsMember({"f32", "f64"}));
    app.add_option("--threads", o.threads, "threads for landscape computation");
    app.add_option("--json", o.json, "also write the results here");
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](int c) { return o.only.empty() || std::count(o.only.begin(), o.only.end(), c) > 0; };
    std::cout << "acceptance: training budget " << o.epochs << " epochs (lr drop every " << o.lr_drop_every
              << "), " << o.precision << ", seed " << o.seed << ", data " << o.data_dir << std::endl;

    EcgRuns ecg;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"persistence oracle equivalence", persistence_oracle},
        {"landscape oracle equivalence", landscape_oracle},
        {"gradient check", gradient_check},
        {"reconstruction round trip", reconstruction_round_trip},
        {"selection rule suite", selection_suite},
        {"shift invariance", shift_invariance},
        {"synthetic attribution", [&] { return synthetic_attribution(o); }},
        {"ECG5000 raw vs landscape",
         [&] {
             ecg = ecg5000(o, wanted(9));
             return ecg_table(ecg);
         }},
        {"ECG5000 selected vs full",
         [&] {
             if (!ecg.available && ecg.missing.empty()) {
                 ecg = ecg5000(o, true);
             }
             return ecg_selected(ecg);
         }},
        {"shift experiment direction", [&] { return shift_direction(o); }},
    };

    nlohmann::json report = nlohmann::json::array();
    int passed = 0;
    int failed = 0;
    int blocked = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!wanted(id)) {
            continue;
        }
        Outcome r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        (r.pass ? passed : failed) += 1;
        blocked += !r.pass && r.blocked;
        std::cout << (r.pass ? "PASS" : "FAIL") << ' ' << std::setw(2) << id << ' ' << criteria[i].first << ": "
                  << (r.blocked ? "BLOCKED: " : "") << r.detail << " [" << fmt("%.1f s", secs) << "]" << std::endl;
        report.push_back({{"criterion", id},
                          {"name", criteria[i].first},
                          {"pass", r.pass},
                          {"blocked", r.blocked},
                          {"detail", r.detail},
                          {"seconds", secs}});
    }
    std::cout << "acceptance: " << passed << " passed, " << failed << " failed";
    if (blocked > 0) {
        std::cout << " (" << blocked << " blocked by missing data)";
    }
    std::cout << std::endl;
    if (!o.json.empty()) {
        write_json(o.json, report);
    }
    return failed - blocked == 0 ? 0 : 1;
}
