#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "plgate/dataset.hpp"
#include "plgate/io.hpp"

namespace plgate {

/// Arithmetic used inside the network. Parameters are always stored as f64.
enum class Precision { f64, f32 };

/// Shape and hyperparameters of the classifier: three (convolution, ReLU,
/// max-pool) stages acting along the time axis of every input row, an optional
/// per-row gate, then two dense layers.
///
/// Channel counts, kernel and pool widths and the hidden size are not fixed by
/// the method; the defaults here are small, generic choices.
struct ModelConfig {
    std::size_t rows = 10;  ///< K landscape levels, or 1 for raw signals
    std::size_t cols = 100; ///< grid points m, or signal length n
    std::array<std::size_t, 3> conv_channels{16, 32, 64};
    std::size_t kernel_width = 3;
    std::size_t pool_width = 2;
    std::size_t dense_hidden = 64;
    std::size_t num_classes = 2;
    bool use_gating = true;
    std::uint64_t seed = 0;
    Precision precision = Precision::f64;

    void validate() const;
    /// Row length after each pooling stage.
    std::array<std::size_t, 3> pooled_lengths() const;
    std::size_t flat_features() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// SGD schedule: lr0, divided by lr_drop_factor every lr_drop_every epochs.
struct TrainConfig {
    std::size_t epochs = 240;
    double lr0 = 0.01;
    std::size_t lr_drop_every = 100;
    double lr_drop_factor = 5.0;
    std::size_t batch_size = 64;
    std::size_t folds = 5;
    /// Only used when folds == 1 (single stratified holdout split).
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    /// Folds trained concurrently; results do not depend on it.
    unsigned jobs = 1;

    void validate() const;
    double learning_rate(std::size_t epoch) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// All trainable tensors. Gradients use the same layout.
struct Parameters {
    /// conv_w[i] is (in_channels * kernel_width) x out_channels; row
    /// ci * kernel_width + j multiplies input channel ci at offset j.
    std::array<Eigen::MatrixXd, 3> conv_w;
    std::array<Eigen::VectorXd, 3> conv_b;
    /// Unconstrained gate parameters; the effective gate is logistic(raw).
    Eigen::VectorXd gate_raw;
    Eigen::MatrixXd dense1_w; ///< hidden x flat_features
    Eigen::VectorXd dense1_b;
    Eigen::MatrixXd dense2_w; ///< classes x hidden
    Eigen::VectorXd dense2_b;

    static Parameters zeros_like(const Parameters& p);
    void add_scaled(const Parameters& g, double scale);
    std::size_t count() const;

    /// Visits (group name, storage) for every parameter group in a fixed order.
    void for_each(const std::function<void(const char*, std::span<double>)>& fn);
    void for_each(const std::function<void(const char*, std::span<const double>)>& fn) const;
};

/// A fixed-shape set of training inputs: each sample is rows x cols, row-major.
struct SampleSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t num_classes = 0;
    std::vector<double> values;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> sample(std::size_t i) const;
    void validate() const;

    /// One row per sample: the raw signal.
    static SampleSet from_signals(const Dataset& d);
    /// K rows per sample: the landscape levels.
    static SampleSet from_stacks(const StackFile& f);
};

struct Batch {
    std::vector<std::span<const double>> inputs;
    std::vector<int> labels;

    static Batch gather(const SampleSet& s, std::span<const std::size_t> indices);
};

class GatedModel {
public:
    GatedModel() = default;
    /// Weights uniform in +-1/sqrt(fan_in), biases zero, gates at 0.5.
    explicit GatedModel(const ModelConfig& cfg);

    const ModelConfig& config() const noexcept { return cfg_; }
    Parameters& params() noexcept { return params_; }
    const Parameters& params() const noexcept { return params_; }

    /// Effective gate weights, each in (0, 1). Empty without gating.
    std::vector<double> gates() const;

    /// Class probabilities, one column per input.
    Eigen::MatrixXd predict(std::span<const std::span<const double>> inputs) const;
    Eigen::MatrixXd logits(std::span<const std::span<const double>> inputs) const;

    /// Mean cross-entropy over the batch and its exact gradient.
    double loss_and_gradients(const Batch& batch, Parameters& grads) const;
    double loss(const Batch& batch) const;

private:
    ModelConfig cfg_{};
    Parameters params_{};
};

/// Softmax probabilities for one rows x cols input.
std::vector<double> forward(const GatedModel& m, std::span<const double> input);

/// Fraction of argmax-correct predictions over `indices` (all samples if empty).
double evaluate(const GatedModel& m, const SampleSet& s, std::span<const std::size_t> indices = {});

struct FitReport {
    std::vector<double> fold_accuracy;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> gating_mean;
    std::vector<double> gating_std;
    std::vector<std::vector<double>> fold_gates;
    std::vector<double> fold_final_loss;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    ModelConfig model{};
    TrainConfig train{};
};

void to_json(nlohmann::json& j, const FitReport& r);
void from_json(const nlohmann::json& j, FitReport& r);

struct EpochLog {
    std::size_t fold = 0;
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double mean_loss = 0.0;
};

struct TrainResult {
    std::vector<GatedModel> fold_models;
    FitReport report;
};

/// Stratified k-fold cross-validation (or one holdout split when folds == 1).
/// Each fold trains a fresh model with plain mini-batch SGD and the step
/// schedule, then records test accuracy and the learned gates. The result
/// depends only on the data, the configs and their seeds.
TrainResult train(const SampleSet& data, ModelConfig model_cfg, const TrainConfig& train_cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Trains one model on `train_idx` and returns it.
GatedModel fit(const SampleSet& data, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
               std::span<const std::size_t> train_idx, std::uint64_t seed, std::size_t fold = 0,
               const std::function<void(const EpochLog&)>& on_epoch = {}, double* final_loss = nullptr);

/// Binary checkpoint: "PLGCKPT1", u32 version, config JSON, then every
/// parameter group as f64 in a fixed order.
void write_checkpoint(const std::filesystem::path& path, const GatedModel& m);
GatedModel read_checkpoint(const std::filesystem::path& path);

double logistic(double x) noexcept;

} // namespace plgate
