// plgate: persistence landscapes with a gated classifier, from the shell.

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI/CLI11.hpp>

#include "commands.hpp"
#include "plgate/error.hpp"
#include "plgate/io.hpp"

using plgate::cli::RunConfig;

namespace {

// Options write into `flags`; apply() copies only those the user actually
// passed, so they override a --config file without clobbering it.
class Binder {
public:
    template <typename Field>
    CLI::Option* opt(CLI::App* app, const std::string& name, Field field, const std::string& desc) {
        auto* o = app->add_option(name, field(flags_), desc);
        sets_.emplace_back(o, [this, field](RunConfig& c) { field(c) = field(flags_); });
        return o;
    }

    template <typename Field>
    CLI::Option* flag(CLI::App* app, const std::string& name, Field field, const std::string& desc) {
        auto* o = app->add_flag(name, field(flags_), desc);
        sets_.emplace_back(o, [this, field](RunConfig& c) { field(c) = field(flags_); });
        return o;
    }

    void apply(RunConfig& c) const {
        for (const auto& [o, set] : sets_) {
            if (o->count() > 0) {
                set(c);
            }
        }
    }

private:
    RunConfig flags_;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> sets_;
};

#define FIELD(member) [](RunConfig& c) -> auto& { return c.member; }

void common(Binder& b, CLI::App* app, std::string& config) {
    app->add_option("--config", config, "JSON run config; flags given on the command line override it")
        ->check(CLI::ExistingFile);
    b.opt(app, "--seed", FIELD(seed), "root seed for folds, initialization, shuffling and padding");
    b.opt(app, "--out", FIELD(out), "run directory (default runs/<command> or runs/<preset>)");
    b.opt(app, "--threads", FIELD(threads), "worker threads for per-signal work (0 = all cores)");
}

void dataset_options(Binder& b, CLI::App* app) {
    b.opt(app, "--input,-i", FIELD(inputs), "dataset files, merged in order (UCR tsv/csv, MIT-BIH csv, dataset .bin)");
    b.opt(app, "--format", FIELD(format), "input format")
        ->check(CLI::IsMember({"auto", "ucr", "mitbih", "dataset"}));
    b.opt(app, "--shift-to", FIELD(shift_to), "zero-pad every signal to this length, split randomly front/back");
}

void landscape_options(Binder& b, CLI::App* app) {
    b.opt(app, "--levels,-K", FIELD(levels), "landscape levels K");
    b.opt(app, "--grid,-m", FIELD(grid), "grid points m on [0, 1]");
    b.flag(app, "--normalize,!--no-normalize", FIELD(normalize), "area-normalize every nonzero level (default on)");
}

void train_options(Binder& b, CLI::App* app) {
    b.opt(app, "--folds", FIELD(train.folds), "cross-validation folds (1 = single stratified holdout)");
    b.opt(app, "--epochs", FIELD(train.epochs), "training epochs per fold");
    b.opt(app, "--lr", FIELD(train.lr0), "initial learning rate");
    b.opt(app, "--lr-drop-every", FIELD(train.lr_drop_every), "epochs between learning-rate drops");
    b.opt(app, "--lr-drop-factor", FIELD(train.lr_drop_factor), "divisor applied at each drop");
    b.opt(app, "--batch-size", FIELD(train.batch_size), "mini-batch size");
    b.opt(app, "--train-fraction", FIELD(train.train_fraction), "training share when --folds 1");
    b.opt(app, "--jobs", FIELD(train.jobs), "folds trained concurrently (results do not depend on it)");
    b.opt(app, "--hidden", FIELD(model.dense_hidden), "hidden units of the first dense layer");
    b.opt(app, "--kernel", FIELD(model.kernel_width), "convolution kernel width");
    b.opt(app, "--pool", FIELD(model.pool_width), "max-pool width");
    b.flag(app, "--gating,!--no-gating", FIELD(model.use_gating), "learn one gate per landscape level (default on)");
    b.opt(app, "--precision", FIELD(model.precision), "arithmetic inside the network")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, plgate::Precision>{{"f64", plgate::Precision::f64}, {"f32", plgate::Precision::f32}}));
}

std::string preset_help() {
    std::string s = "Presets:\n";
    for (const auto& [name, what] : plgate::cli::presets()) {
        s += "  " + name + "\n      " + what + "\n";
    }
    s += "\nPresets read ECG5000_TRAIN.tsv/ECG5000_TEST.tsv or mitbih_train.csv from --data-dir\n"
         "(default $PLGATE_DATA_DIR, else ./data). --input replaces those files.\n";
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persistence landscapes of time series, a classifier with one learned gate per landscape\n"
                 "level, level selection from the gates and reconstruction of signals from the chosen levels."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "plgate 0.1.0");

    Binder b;
    std::string config;
    std::string manifest;

    auto* landscape = app.add_subcommand("landscape", "compute landscape stacks (stacks.bin) and per-class plots");
    common(b, landscape, config);
    dataset_options(b, landscape);
    landscape_options(b, landscape);

    auto* train = app.add_subcommand("train", "cross-validate the classifier on stacks or raw signals");
    common(b, train, config);
    b.opt(train, "--stacks", FIELD(stacks), "stacks.bin from `landscape`");
    dataset_options(b, train);
    b.flag(train, "--raw", FIELD(raw), "train on --input signals even when --stacks is given");
    train_options(b, train);

    auto* select = app.add_subcommand("select", "choose landscape levels from a report's gate weights");
    common(b, select, config);
    b.opt(select, "--report", FIELD(report), "report.json from `train`");

    auto* reconstruct = app.add_subcommand("reconstruct", "rebuild signals from the selected levels");
    common(b, reconstruct, config);
    dataset_options(b, reconstruct);
    b.opt(reconstruct, "--selection", FIELD(selection), "selection.json from `select`");
    b.opt(reconstruct, "--per-class", FIELD(per_class), "signals taken from each class (first ones in file order)");
    b.opt(reconstruct, "--samples", FIELD(samples), "explicit sample indices instead of --per-class");

    auto* experiment = app.add_subcommand("experiment", "run a named experiment end to end and write its table");
    common(b, experiment, config);
    b.opt(experiment, "preset", FIELD(preset), "preset name")->required();
    b.opt(experiment, "--data-dir", FIELD(data_dir), "directory holding the preset's dataset files");
    dataset_options(b, experiment);
    landscape_options(b, experiment);
    train_options(b, experiment);
    experiment->footer(preset_help());

    auto* again = app.add_subcommand("rerun", "repeat the run recorded in a manifest.json");
    again->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    std::string rerun_out;
    again->add_option("--out", rerun_out, "write into this directory instead of the recorded one");

    CLI11_PARSE(app, argc, argv);

    const std::vector<std::string> args(argv, argv + argc);
    auto log = [](const std::string& line) { std::cerr << line << std::endl; };
    try {
        if (again->parsed()) {
            plgate::cli::rerun(manifest, rerun_out, log);
            return 0;
        }
        RunConfig cfg;
        if (!config.empty()) {
            cfg = plgate::read_json(config).get<RunConfig>();
        }
        b.apply(cfg);
        for (auto* sub : {landscape, train, select, reconstruct, experiment}) {
            if (sub->parsed()) {
                plgate::cli::dispatch(sub->get_name(), cfg, args, log);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "plgate: error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
