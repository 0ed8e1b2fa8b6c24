#pragma once

// The work behind each `plgate` subcommand. main.cpp only parses flags into a
// RunConfig; everything here is callable from tests.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plgate/dataset.hpp"
#include "plgate/model.hpp"

namespace plgate::cli {

/// Everything a run depends on. A JSON config file fills it first, explicit
/// flags override, and the final value is snapshotted into the manifest.
struct RunConfig {
    std::filesystem::path out;         ///< run directory; empty means runs/<command>
    std::vector<std::string> inputs;   ///< dataset files, merged in order
    std::string format = "auto";       ///< ucr | mitbih | dataset | auto
    std::string stacks;                ///< stacks.bin for `train`
    std::string report;                ///< report.json for `select`
    std::string selection;             ///< selection.json for `reconstruct`
    std::string preset;                ///< named experiment
    std::string data_dir;              ///< where presets look for dataset files
    std::uint64_t seed = 0;
    std::size_t levels = 10;
    std::size_t grid = 100;
    bool normalize = true;
    std::size_t shift_to = 0;          ///< zero-pad every signal to this length; 0 = off
    unsigned threads = 1;
    std::size_t per_class = 1;         ///< reconstruct: samples drawn from each class
    std::vector<std::size_t> samples;  ///< reconstruct: explicit sample indices
    bool raw = false;                  ///< train on signals even if stacks are given
    ModelConfig model{};
    TrainConfig train{};
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Presets accepted by `experiment`, with one-line descriptions.
const std::vector<std::pair<std::string, std::string>>& presets();

/// Loads and merges `inputs` (standardized signals) and applies `shift_to`.
Dataset load_inputs(const RunConfig& cfg);

using Log = std::function<void(const std::string&)>;

/// Each command writes into cfg.out and finishes with manifest.json. On
/// failure nothing it wrote is left behind. Paths are expected to be
/// resolved already; dispatch() does that.
void cmd_landscape(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log);
void cmd_train(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log);
void cmd_select(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log);
void cmd_reconstruct(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log);
void cmd_experiment(const RunConfig& cfg, const std::vector<std::string>& argv, const Log& log);

/// Runs `command` with `cfg`.
void dispatch(const std::string& command, const RunConfig& cfg, const std::vector<std::string>& argv,
              const Log& log);

/// Re-executes the run recorded in a manifest, optionally into another
/// directory. Fails if any recorded input no longer has the recorded hash.
void rerun(const std::filesystem::path& manifest, const std::filesystem::path& out, const Log& log);

/// One cell of an experiment table.
struct Cell {
    std::string name;
    double mean = 0.0;
    double std = 0.0;
    std::size_t rows = 0; ///< input rows (levels) the model saw
    std::string note;
};

void to_json(nlohmann::json& j, const Cell& c);

} // namespace plgate::cli
