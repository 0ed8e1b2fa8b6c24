#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "plgate/error.hpp"
#include "plgate/io.hpp"
#include "plgate/landscape.hpp"
#include "plgate/persistence.hpp"
#include "plgate/reconstruction.hpp"
#include "plgate/selection.hpp"
#include "run_dir.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;

namespace plgate::cli {

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"out", c.out.string()},
                       {"inputs", c.inputs},
                       {"format", c.format},
                       {"stacks", c.stacks},
                       {"report", c.report},
                       {"selection", c.selection},
                       {"preset", c.preset},
                       {"data_dir", c.data_dir},
                       {"seed", c.seed},
                       {"levels", c.levels},
                       {"grid", c.grid},
                       {"normalize", c.normalize},
                       {"shift_to", c.shift_to},
                       {"threads", c.threads},
                       {"per_class", c.per_class},
                       {"samples", c.samples},
                       {"raw", c.raw},
                       {"model", c.model},
                       {"train", c.train}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    if (!j.is_object()) {
        throw Error("config must be a JSON object");
    }
    static const std::vector<std::string> known{"out",  "inputs", "format", "stacks",   "report",    "selection",
                                                "preset", "data_dir", "seed", "levels", "grid",      "normalize",
                                                "shift_to", "threads", "per_class", "samples", "raw", "model", "train"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error("unknown config key '" + key + "'");
        }
    }
    const RunConfig d;
    c.out = j.value("out", d.out.string());
    c.inputs = j.value("inputs", d.inputs);
    c.format = j.value("format", d.format);
    c.stacks = j.value("stacks", d.stacks);
    c.report = j.value("report", d.report);
    c.selection = j.value("selection", d.selection);
    c.preset = j.value("preset", d.preset);
    c.data_dir = j.value("data_dir", d.data_dir);
    c.seed = j.value("seed", d.seed);
    c.levels = j.value("levels", d.levels);
    c.grid = j.value("grid", d.grid);
    c.normalize = j.value("normalize", d.normalize);
    c.shift_to = j.value("shift_to", d.shift_to);
    c.threads = j.value("threads", d.threads);
    c.per_class = j.value("per_class", d.per_class);
    c.samples = j.value("samples", d.samples);
    c.raw = j.value("raw", d.raw);
    c.model = j.contains("model") ? j.at("model").get<ModelConfig>() : d.model;
    c.train = j.contains("train") ? j.at("train").get<TrainConfig>() : d.train;
}

void to_json(nlohmann::json& j, const Cell& c) {
    j = nlohmann::json{{"name", c.name}, {"mean", c.mean}, {"std", c.std}, {"rows", c.rows}, {"note", c.note}};
}

const std::vector<std::pair<std::string, std::string>>& presets() {
    static const std::vector<std::pair<std::string, std::string>> p{
        {"ecg5000-table2", "ECG5000: raw signal, unnormalized and normalized 10-level landscapes, selected levels"},
        {"mitbih-table3", "MIT-BIH beats: raw signal, 10 levels, selected levels, signals reconstructed from them"},
        {"mitbih-shift", "MIT-BIH beats zero-padded to twice their length: raw and landscape input, before and after"},
    };
    return p;
}

namespace {

// Seed for the padding split, kept apart from the fold and init streams.
constexpr std::uint64_t kShiftSeedSalt = 0x9e3779b97f4a7c15ULL;

std::string format_pct(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f +- %.2f", 100.0 * mean, 100.0 * std);
    return buf;
}

std::string fmt(double v, int digits = 6) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string dataset_name(const fs::path& p) {
    std::string stem = p.stem().string();
    for (const char* suffix : {"_TRAIN", "_TEST", "_train", "_test"}) {
        const std::string s = suffix;
        if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) {
            return stem.substr(0, stem.size() - s.size());
        }
    }
    return stem;
}

Dataset merge(std::vector<Dataset> parts) {
    Dataset out = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].length() != out.length()) {
            throw Error("input files disagree on signal length");
        }
        out.class_count = std::max(out.class_count, parts[i].class_count);
        for (auto& s : parts[i].signals) {
            out.signals.push_back(std::move(s));
        }
    }
    out.validate();
    return out;
}

std::size_t pick_threads(unsigned requested) {
    return requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
}

StackOptions stack_options(const RunConfig& cfg, bool normalize) {
    StackOptions o;
    o.grid.m = cfg.grid;
    o.levels = cfg.levels;
    o.normalize = normalize;
    o.threads = static_cast<unsigned>(pick_threads(cfg.threads));
    return o;
}

StackFile make_stacks(const Dataset& d, const RunConfig& cfg, bool normalize) {
    StackFile f;
    f.dataset = d.name;
    f.stacks = stack_dataset(d.signals, stack_options(cfg, normalize));
    f.labels = d.labels();
    f.class_count = d.class_count;
    f.seed = cfg.seed;
    return f;
}

LineChart landscape_chart(const LandscapeStack& ls, const std::string& title) {
    LineChart c;
    c.title = title;
    c.x_label = "t";
    c.y_label = ls.normalized() ? "lambda_k (area 1)" : "lambda_k";
    std::vector<double> t(ls.width());
    for (std::size_t j = 0; j < t.size(); ++j) {
        t[j] = ls.grid().at(j);
    }
    for (std::size_t k = 0; k < ls.levels(); ++k) {
        const auto row = ls.row(k);
        c.series.push_back({"lambda_" + std::to_string(k + 1), t, {row.begin(), row.end()}});
    }
    return c;
}

std::vector<std::size_t> first_of_each_class(const std::vector<int>& labels, std::size_t classes, std::size_t per) {
    std::vector<std::size_t> out;
    std::vector<std::size_t> taken(classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        if (taken[c] < per) {
            ++taken[c];
            out.push_back(i);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    return out;
}

/// Trains with a progress log and writes report.json, training_log.csv,
/// a loss plot and, with gating, the weight bars, all under `prefix`.
FitReport run_training(RunDir& dir, const std::string& prefix, const SampleSet& data, ModelConfig model,
                       TrainConfig train_cfg, const Log& log, const std::string& title, bool checkpoints) {
    model.use_gating = model.use_gating && data.rows >= 2;
    const std::size_t every = std::max<std::size_t>(1, train_cfg.epochs / 10);
    std::map<std::pair<std::size_t, std::size_t>, EpochLog> epochs;
    const auto t0 = std::chrono::steady_clock::now();
    auto result = plgate::train(data, model, train_cfg, [&](const EpochLog& e) {
        epochs[{e.fold, e.epoch}] = e;
        if ((e.epoch + 1) % every == 0 || e.epoch + 1 == train_cfg.epochs) {
            log(title + ": fold " + std::to_string(e.fold + 1) + " epoch " + std::to_string(e.epoch + 1) + "/" +
                std::to_string(train_cfg.epochs) + " loss " + fmt(e.mean_loss, 4));
        }
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const FitReport& r = result.report;
    log(title + ": accuracy " + format_pct(r.mean, r.std) + " (" + fmt(secs, 1) + " s)");

    dir.write_json(prefix + "report.json", r);

    std::ostringstream csv;
    csv << "fold,epoch,learning_rate,mean_loss\n";
    std::vector<Series> loss(r.fold_accuracy.size());
    for (const auto& [key, e] : epochs) {
        csv << e.fold << ',' << e.epoch << ',' << fmt(e.learning_rate, 8) << ',' << fmt(e.mean_loss, 8) << '\n';
        auto& s = loss[e.fold];
        s.name = "fold " + std::to_string(e.fold + 1);
        s.x.push_back(static_cast<double>(e.epoch + 1));
        s.y.push_back(e.mean_loss);
    }
    dir.write(prefix + "training_log.csv", csv.str());
    dir.write(prefix + "plots/loss.svg", render_svg(LineChart{title + ": training loss", "epoch", "mean cross-entropy", loss}));

    if (!r.gating_mean.empty()) {
        std::ostringstream w;
        w << "level,mean,std";
        for (std::size_t f = 0; f < r.fold_gates.size(); ++f) {
            w << ",fold_" << f + 1;
        }
        w << '\n';
        BarChart bars{title + ": learned gate weights", "landscape level", "weight (mean +- std over folds)", {}, {}, {}, {}};
        for (std::size_t k = 0; k < r.gating_mean.size(); ++k) {
            w << k + 1 << ',' << fmt(r.gating_mean[k], 8) << ',' << fmt(r.gating_std[k], 8);
            for (const auto& g : r.fold_gates) {
                w << ',' << fmt(g[k], 8);
            }
            w << '\n';
            bars.labels.push_back(std::to_string(k + 1));
            bars.values.push_back(r.gating_mean[k]);
            bars.errors.push_back(r.gating_std[k]);
        }
        dir.write(prefix + "weights.csv", w.str());
        dir.write(prefix + "plots/weights.svg", render_svg(bars));
    }
    if (checkpoints) {
        for (std::size_t f = 0; f < result.fold_models.size(); ++f) {
            write_checkpoint(dir.path(prefix + "checkpoints/fold_" + std::to_string(f + 1) + ".ckpt"),
                             result.fold_models[f]);
        }
    }
    return r;
}

std::string selection_summary(const SelectionResult& s) {
    std::string levels;
    for (const auto k : s.selected) {
        levels += (levels.empty() ? "" : ",") + std::to_string(k);
    }
    return "levels {" + levels + "} by " + std::string(to_string(s.rule_fired)) + " (cut at " +
           std::to_string(s.cut_index) + ")";
}

void write_selection(RunDir& dir, const std::string& prefix, const SelectionResult& sel, const FitReport& r) {
    nlohmann::json j = sel;
    j["gating_std"] = r.gating_std;
    dir.write_json(prefix + "selection.json", j);
    BarChart bars{"Level selection: " + selection_summary(sel), "landscape level", "mean gate weight", {}, {}, {}, {}};
    for (std::size_t k = 0; k < r.gating_mean.size(); ++k) {
        bars.labels.push_back(std::to_string(k + 1));
        bars.values.push_back(r.gating_mean[k]);
        bars.errors.push_back(k < r.gating_std.size() ? r.gating_std[k] : 0.0);
        bars.highlight.push_back(std::find(sel.selected.begin(), sel.selected.end(), k + 1) != sel.selected.end());
    }
    dir.write(prefix + "plots/selection.svg", render_svg(bars));
}

/// Overlay of the original signal and its reconstruction.
std::string overlay_svg(const Signal& original, const Reconstruction& rec, const std::string& title) {
    LineChart c;
    c.title = title;
    c.x_label = "sample";
    c.y_label = "standardized value";
    Series o{"original", {}, original.values, false, false};
    for (std::size_t i = 0; i < original.size(); ++i) {
        o.x.push_back(static_cast<double>(i));
    }
    Series r{"reconstruction", {}, {}, true, true};
    for (const auto& p : rec.points) {
        r.x.push_back(p.x);
        r.y.push_back(p.y);
    }
    c.series = {std::move(o), std::move(r)};
    return render_svg(c);
}

/// Endpoints and global minimum: the reconstruction of a signal whose
/// diagram is empty, where no landscape level carries anything to match.
Reconstruction anchors_only(const Signal& s) {
    Reconstruction r;
    const auto n = s.size();
    const auto lo = static_cast<std::size_t>(std::min_element(s.values.begin(), s.values.end()) - s.values.begin());
    std::vector<std::size_t> idx{0, lo, n - 1};
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (const auto i : idx) {
        r.points.push_back({static_cast<double>(i), s.values[i],
                            i == lo ? ExtremumKind::minimum : ExtremumKind::maximum});
    }
    r.simplified = resample(r.points, n);
    return r;
}

fs::path find_file(const fs::path& dir, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        if (fs::exists(dir / n)) {
            return dir / n;
        }
    }
    std::string list;
    for (const auto& n : names) {
        list += (list.empty() ? "" : ", ") + n;
    }
    throw Error("none of " + list + " found in " + dir.string());
}

std::string data_dir_of(const RunConfig& cfg) {
    if (!cfg.data_dir.empty()) {
        return cfg.data_dir;
    }
    if (const char* env = std::getenv("PLGATE_DATA_DIR")) {
        return env;
    }
    return "data";
}

void add_inputs(RunDir& dir, const std::vector<std::string>& files) {
    for (const auto& f : files) {
        if (!fs::exists(f)) {
            throw Error("cannot open " + f);
        }
        dir.add_input(f);
    }
}

void write_table(RunDir& dir, const std::string& title, const std::vector<Cell>& cells, const nlohmann::json& extra) {
    nlohmann::json j{{"title", title}, {"cells", cells}};
    j.update(extra);
    dir.write_json("table.json", j);

    std::ostringstream md;
    md << "| " << title;
    for (const auto& c : cells) {
        md << " | " << c.name;
    }
    md << " |\n|---";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        md << "|---";
    }
    md << "|\n| accuracy (%)";
    for (const auto& c : cells) {
        md << " | " << format_pct(c.mean, c.std);
    }
    md << " |\n| input rows";
    for (const auto& c : cells) {
        md << " | " << c.rows;
    }
    md << " |\n";
    for (const auto& c : cells) {
        if (!c.note.empty()) {
            md << "\n" << c.name << ": " << c.note << "\n";
        }
    }
    dir.write("table.md", md.str());

    BarChart bars{title, "input", "accuracy (mean +- std over folds)", {}, {}, {}, {}};
    for (const auto& c : cells) {
        bars.labels.push_back(c.name);
        bars.values.push_back(c.mean);
        bars.errors.push_back(c.std);
    }
    dir.write("plots/table.svg", render_svg(bars));
}

TrainConfig seeded(const RunConfig& cfg) {
    TrainConfig t = cfg.train;
    t.seed = cfg.seed;
    return t;
}

Cell cell_from(const std::string& name, const FitReport& r, std::size_t rows, std::string note = {}) {
    return Cell{name, r.mean, r.std, rows, std::move(note)};
}

// Reconstructs every signal from `levels` and resamples it to its length.
Dataset reconstruct_dataset(const Dataset& d, const std::vector<std::size_t>& levels, unsigned threads,
                            std::size_t& fallbacks) {
    Dataset out = d;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> fell{0};
    auto work = [&] {
        for (std::size_t i = next++; i < d.size(); i = next++) {
            const Signal& s = d.signals[i];
            Reconstruction rec;
            if (sublevel_diagram(s).pairs.empty()) {
                rec = anchors_only(s);
                ++fell;
            } else {
                rec = reconstruct_from_levels(s, levels);
            }
            out.signals[i].values = std::move(rec.simplified.values);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    fallbacks = fell;
    return out;
}

void experiment_table2(RunDir& dir, const RunConfig& cfg, const Dataset& d, const Log& log) {
    const TrainConfig t = seeded(cfg);
    std::vector<Cell> cells;

    ModelConfig raw_model = cfg.model;
    raw_model.use_gating = false;
    const auto raw = run_training(dir, "raw/", SampleSet::from_signals(d), raw_model, t, log, "raw", false);
    cells.push_back(cell_from("raw", raw, 1));

    const auto unnorm_stacks = make_stacks(d, cfg, false);
    const auto unnorm = run_training(dir, "unnormalized/", SampleSet::from_stacks(unnorm_stacks), cfg.model, t, log,
                                     "unnormalized", false);
    cells.push_back(cell_from("unnormalized", unnorm, cfg.levels));

    const auto norm_stacks = make_stacks(d, cfg, true);
    const auto norm = run_training(dir, "normalized/", SampleSet::from_stacks(norm_stacks), cfg.model, t, log,
                                   "normalized", false);
    cells.push_back(cell_from("normalized", norm, cfg.levels));

    const auto sel = select_levels(norm.gating_mean);
    write_selection(dir, "", sel, norm);
    log("selected " + selection_summary(sel));
    StackFile restricted = norm_stacks;
    for (auto& s : restricted.stacks) {
        s = restrict_stack(s, sel);
    }
    const auto chosen = run_training(dir, "selected/", SampleSet::from_stacks(restricted), cfg.model, t, log,
                                     "selected", false);
    cells.push_back(cell_from("selected", chosen, sel.selected.size(), selection_summary(sel)));

    write_table(dir, d.name, cells, {{"selection", sel}});
}

void experiment_table3(RunDir& dir, const RunConfig& cfg, const Dataset& d, const Log& log) {
    const TrainConfig t = seeded(cfg);
    std::vector<Cell> cells;
    ModelConfig raw_model = cfg.model;
    raw_model.use_gating = false;

    const auto raw = run_training(dir, "raw/", SampleSet::from_signals(d), raw_model, t, log, "raw", false);
    cells.push_back(cell_from("raw", raw, 1));

    const auto stacks = make_stacks(d, cfg, cfg.normalize);
    const auto full = run_training(dir, "levels/", SampleSet::from_stacks(stacks), cfg.model, t, log,
                                   std::to_string(cfg.levels) + " levels", false);
    cells.push_back(cell_from(std::to_string(cfg.levels) + " levels", full, cfg.levels));

    const auto sel = select_levels(full.gating_mean);
    write_selection(dir, "", sel, full);
    log("selected " + selection_summary(sel));
    StackFile restricted = stacks;
    for (auto& s : restricted.stacks) {
        s = restrict_stack(s, sel);
    }
    const auto chosen =
        run_training(dir, "selected/", SampleSet::from_stacks(restricted), cfg.model, t, log, "selected", false);
    cells.push_back(cell_from("selected", chosen, sel.selected.size(), selection_summary(sel)));

    std::size_t fallbacks = 0;
    const auto rebuilt = reconstruct_dataset(d, sel.selected, static_cast<unsigned>(pick_threads(cfg.threads)), fallbacks);
    for (const auto i : first_of_each_class(d.labels(), d.class_count, 1)) {
        const Signal& s = d.signals[i];
        const auto rec = sublevel_diagram(s).pairs.empty() ? anchors_only(s) : reconstruct_from_levels(s, sel.selected);
        const std::string c = std::to_string(*s.label);
        dir.write("plots/reconstruction_class_" + c + ".svg",
                  overlay_svg(s, rec, "class " + c + ", sample " + std::to_string(i) + ": " + selection_summary(sel)));
    }
    const auto recon = run_training(dir, "reconstructed/", SampleSet::from_signals(rebuilt), raw_model, t, log,
                                    "reconstructed", false);
    cells.push_back(cell_from("reconstructed", recon, 1,
                              fallbacks ? std::to_string(fallbacks) + " signals without persistence pairs kept only "
                                                                      "their endpoints and global minimum"
                                        : std::string{}));

    write_table(dir, d.name, cells, {{"selection", sel}});
}

void experiment_shift(RunDir& dir, const RunConfig& cfg, const Dataset& d, const Log& log) {
    const TrainConfig t = seeded(cfg);
    const std::size_t target = cfg.shift_to ? cfg.shift_to : 2 * d.length();
    const Dataset shifted = shift_augment(d, target, cfg.seed ^ kShiftSeedSalt);
    std::vector<Cell> cells;
    ModelConfig raw_model = cfg.model;
    raw_model.use_gating = false;

    const auto raw = run_training(dir, "raw/", SampleSet::from_signals(d), raw_model, t, log, "raw", false);
    cells.push_back(cell_from("raw", raw, 1));
    const auto raw_s = run_training(dir, "raw_shifted/", SampleSet::from_signals(shifted), raw_model, t, log,
                                    "raw, shifted", false);
    cells.push_back(cell_from("raw, shifted", raw_s, 1, "zero-padded to length " + std::to_string(target)));

    const auto stacks = make_stacks(d, cfg, cfg.normalize);
    auto stacks_s = make_stacks(shifted, cfg, cfg.normalize);
    stacks_s.dataset = stacks.dataset;
    const bool identical = stacks.stacks == stacks_s.stacks;
    log(std::string("landscape stacks after padding are ") + (identical ? "bit-identical" : "DIFFERENT"));
    const auto land = run_training(dir, "landscape/", SampleSet::from_stacks(stacks), cfg.model, t, log,
                                   "landscape", false);
    cells.push_back(cell_from("landscape", land, cfg.levels));
    if (identical) {
        // Same inputs, same seeds: training is deterministic, so the shifted
        // run would repeat the one above bit for bit.
        cells.push_back(cell_from("landscape, shifted", land, cfg.levels,
                                  "stacks bit-identical to the unshifted ones; report reused"));
    } else {
        const auto land_s = run_training(dir, "landscape_shifted/", SampleSet::from_stacks(stacks_s), cfg.model, t,
                                         log, "landscape, shifted", false);
        cells.push_back(cell_from("landscape, shifted", land_s, cfg.levels));
    }
    write_table(dir, d.name + " shift", cells,
                {{"target_length", target}, {"stacks_identical", identical}, {"raw_drop", raw.mean - raw_s.mean}});
}

fs::path absolute_or_empty(const std::string& p) {
    return p.empty() ? fs::path{} : fs::absolute(p).lexically_normal();
}

// Absolute paths make the snapshot rerunnable from any working directory.
RunConfig resolved(RunConfig cfg, const std::string& command) {
    for (auto& in : cfg.inputs) {
        in = absolute_or_empty(in).string();
    }
    cfg.stacks = absolute_or_empty(cfg.stacks).string();
    cfg.report = absolute_or_empty(cfg.report).string();
    cfg.selection = absolute_or_empty(cfg.selection).string();
    if (command == "experiment") {
        cfg.data_dir = absolute_or_empty(data_dir_of(cfg)).string();
    }
    if (cfg.out.empty()) {
        cfg.out = fs::path("runs") / (command == "experiment" && !cfg.preset.empty() ? cfg.preset : command);
    }
    cfg.out = fs::absolute(cfg.out).lexically_normal();
    return cfg;
}

} // namespace

Dataset load_inputs(const RunConfig& cfg) {
    if (cfg.inputs.empty()) {
        throw Error("no input dataset given");
    }
    std::vector<fs::path> files(cfg.inputs.begin(), cfg.inputs.end());
    for (const auto& f : files) {
        if (!fs::exists(f)) {
            throw Error("cannot open " + f.string());
        }
    }
    std::string format = cfg.format;
    if (format == "auto") {
        const bool bin = std::all_of(files.begin(), files.end(), [](const fs::path& p) { return p.extension() == ".bin"; });
        format = bin ? "dataset" : "ucr";
    }
    Dataset d;
    if (format == "ucr") {
        d = load_ucr(files, dataset_name(files.front()));
    } else if (format == "mitbih") {
        std::vector<Dataset> parts;
        for (const auto& f : files) {
            parts.push_back(load_mitbih_csv(f));
        }
        d = merge(std::move(parts));
        d.name = "MIT-BIH";
    } else if (format == "dataset") {
        std::vector<Dataset> parts;
        for (const auto& f : files) {
            parts.push_back(read_dataset(f));
        }
        d = merge(std::move(parts));
    } else {
        throw Error("unknown input format '" + format + "' (expected ucr, mitbih, dataset or auto)");
    }
    if (cfg.shift_to > 0) {
        d = shift_augment(d, cfg.shift_to, cfg.seed ^ kShiftSeedSalt);
    }
    return d;
}

void cmd_landscape(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log) {
    RunDir dir(cfg.out);
    add_inputs(dir, cfg.inputs);
    const Dataset d = load_inputs(cfg);
    log("loaded " + d.name + ": " + std::to_string(d.size()) + " signals of length " + std::to_string(d.length()) +
        ", " + std::to_string(d.class_count) + " classes");
    const StackFile f = make_stacks(d, cfg, cfg.normalize);
    write_stacks(dir.path("stacks.bin"), f);
    dir.path("stacks.json");
    dir.write_json("config.json", cfg);
    for (const auto i : first_of_each_class(f.labels, f.class_count, 1)) {
        const std::string c = std::to_string(f.labels[i]);
        const auto& ls = f.stacks[i];
        write_stack_csv(dir.path("landscapes/class_" + c + ".csv"), ls);
        dir.write("plots/class_" + c + "_landscape.svg",
                  render_svg(landscape_chart(ls, d.name + " class " + c + ", sample " + std::to_string(i))));
    }
    log("wrote " + std::to_string(f.stacks.size()) + " stacks of " + std::to_string(cfg.levels) + "x" +
        std::to_string(cfg.grid) + (cfg.normalize ? " (area-normalized)" : "") + " to " + dir.root().string());
    dir.commit("landscape", cfg, cfg.seed, argv);
}

void cmd_train(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log) {
    RunDir dir(cfg.out);
    SampleSet data;
    std::string what;
    if (!cfg.stacks.empty() && !cfg.raw) {
        if (!fs::exists(cfg.stacks)) {
            throw Error("cannot open " + cfg.stacks);
        }
        dir.add_input(cfg.stacks);
        const StackFile f = read_stacks(cfg.stacks);
        data = SampleSet::from_stacks(f);
        what = f.dataset + " landscapes";
    } else {
        add_inputs(dir, cfg.inputs);
        const Dataset d = load_inputs(cfg);
        data = SampleSet::from_signals(d);
        what = d.name + " raw";
    }
    log("training on " + what + ": " + std::to_string(data.size()) + " samples, " + std::to_string(data.rows) + "x" +
        std::to_string(data.cols));
    dir.write_json("config.json", cfg);
    run_training(dir, "", data, cfg.model, seeded(cfg), log, what, true);
    dir.commit("train", cfg, cfg.seed, argv);
}

void cmd_select(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log) {
    if (cfg.report.empty()) {
        throw Error("select needs --report");
    }
    if (!fs::exists(cfg.report)) {
        throw Error("cannot open " + cfg.report);
    }
    RunDir dir(cfg.out);
    dir.add_input(cfg.report);
    const FitReport r = read_json(cfg.report).get<FitReport>();
    if (r.gating_mean.empty()) {
        throw Error(cfg.report + " has no gate weights (the model was trained without gating)");
    }
    const auto sel = select_levels(r.gating_mean);
    write_selection(dir, "", sel, r);
    dir.write_json("config.json", cfg);
    log("selected " + selection_summary(sel));
    dir.commit("select", cfg, cfg.seed, argv);
}

void cmd_reconstruct(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log) {
    if (cfg.selection.empty()) {
        throw Error("reconstruct needs --selection");
    }
    if (!fs::exists(cfg.selection)) {
        throw Error("cannot open " + cfg.selection);
    }
    RunDir dir(cfg.out);
    dir.add_input(cfg.selection);
    add_inputs(dir, cfg.inputs);
    const auto sel = read_json(cfg.selection).get<SelectionResult>();
    const Dataset d = load_inputs(cfg);
    std::vector<std::size_t> picks = cfg.samples;
    if (picks.empty()) {
        picks = first_of_each_class(d.labels(), d.class_count, cfg.per_class);
    }
    std::ostringstream summary;
    summary << "sample,label,critical_points,kept_points\n";
    for (const auto i : picks) {
        if (i >= d.size()) {
            throw Error("sample " + std::to_string(i) + " out of range (dataset has " + std::to_string(d.size()) + ")");
        }
        const Signal& s = d.signals[i];
        Reconstruction rec;
        try {
            rec = reconstruct_from_levels(s, sel.selected);
        } catch (const Error& e) {
            throw Error("sample " + std::to_string(i) + ": " + e.what());
        }
        const std::string id = std::to_string(i);
        const std::string c = std::to_string(s.label.value_or(0));
        nlohmann::json j = rec;
        j["sample"] = i;
        j["label"] = s.label.value_or(0);
        j["levels"] = sel.selected;
        dir.write_json("reconstructions/sample_" + id + ".json", j);
        dir.write("plots/reconstruction_class_" + c + "_sample_" + id + ".svg",
                  overlay_svg(s, rec, d.name + " class " + c + ", sample " + id + ": " + selection_summary(sel)));
        summary << i << ',' << c << ',' << critical_points(s).size() << ',' << rec.points.size() << '\n';
    }
    dir.write("reconstructions/summary.csv", summary.str());
    dir.write_json("config.json", cfg);
    log("reconstructed " + std::to_string(picks.size()) + " signals from " + selection_summary(sel));
    dir.commit("reconstruct", cfg, cfg.seed, argv);
}

void cmd_experiment(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log) {
    const auto& known = presets();
    if (std::none_of(known.begin(), known.end(), [&](const auto& p) { return p.first == cfg.preset; })) {
        throw Error("unknown preset '" + cfg.preset + "'");
    }
    RunConfig run = cfg;
    const fs::path data = data_dir_of(cfg);
    if (run.inputs.empty()) {
        if (cfg.preset == "ecg5000-table2") {
            run.inputs = {find_file(data, {"ECG5000_TRAIN.tsv", "ECG5000_TRAIN.txt"}).string(),
                          find_file(data, {"ECG5000_TEST.tsv", "ECG5000_TEST.txt"}).string()};
            run.format = "ucr";
        } else {
            run.inputs = {find_file(data, {"mitbih_train.csv"}).string()};
            run.format = "mitbih";
        }
    }
    // Padding belongs to the shift preset itself, never to the base data.
    RunConfig base = run;
    base.shift_to = 0;

    RunDir dir(cfg.out);
    add_inputs(dir, run.inputs);
    const Dataset d = load_inputs(base);
    log(cfg.preset + ": " + d.name + ", " + std::to_string(d.size()) + " signals of length " +
        std::to_string(d.length()));
    dir.write_json("config.json", run);
    if (cfg.preset == "ecg5000-table2") {
        experiment_table2(dir, run, d, log);
    } else if (cfg.preset == "mitbih-table3") {
        experiment_table3(dir, run, d, log);
    } else {
        experiment_shift(dir, run, d, log);
    }
    log("table written to " + (dir.root() / "table.md").string());
    dir.commit("experiment", run, run.seed, argv);
}

void dispatch(const std::string& command, const RunConfig& cfg_in, const std::vector<std::string>& argv,
              const Log& log) {
    const RunConfig cfg = resolved(cfg_in, command);
    if (command == "landscape") {
        cmd_landscape(cfg, argv, log);
    } else if (command == "train") {
        cmd_train(cfg, argv, log);
    } else if (command == "select") {
        cmd_select(cfg, argv, log);
    } else if (command == "reconstruct") {
        cmd_reconstruct(cfg, argv, log);
    } else if (command == "experiment") {
        cmd_experiment(cfg, argv, log);
    } else {
        throw Error("unknown command '" + command + "'");
    }
}

void rerun(const fs::path& manifest, const fs::path& out, const Log& log) {
    const auto m = read_json(manifest);
    if (m.value("tool", std::string{}) != "plgate" || !m.contains("command") || !m.contains("config")) {
        throw Error(manifest.string() + " is not a plgate manifest");
    }
    for (const auto& in : m.value("inputs", nlohmann::json::array())) {
        const std::string path = in.at("path");
        if (!fs::exists(path)) {
            throw Error("recorded input " + path + " is missing");
        }
        if (sha256_file(path) != in.at("sha256").get<std::string>()) {
            throw Error("recorded input " + path + " has changed since the run");
        }
    }
    RunConfig cfg = m.at("config").get<RunConfig>();
    if (!out.empty()) {
        cfg.out = out;
    }
    std::vector<std::string> argv = m.value("argv", std::vector<std::string>{});
    log("rerunning '" + m.at("command").get<std::string>() + "' into " + cfg.out.string());
    dispatch(m.at("command").get<std::string>(), cfg, argv, log);
}

} // namespace plgate::cli
