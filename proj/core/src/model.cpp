#include "plgate/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "plgate/error.hpp"

namespace plgate {

using Eigen::MatrixXd;
using Eigen::VectorXd;

NLOHMANN_JSON_SERIALIZE_ENUM(Precision, {{Precision::f64, "f64"}, {Precision::f32, "f32"}})

double logistic(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Configs

void ModelConfig::validate() const {
    if (rows == 0 || cols == 0) {
        throw Error("model input shape must be nonzero");
    }
    for (const auto c : conv_channels) {
        if (c == 0) {
            throw Error("convolution channel counts must be positive");
        }
    }
    if (kernel_width == 0 || pool_width == 0 || dense_hidden == 0) {
        throw Error("kernel width, pool width and hidden size must be positive");
    }
    if (num_classes < 2) {
        throw Error("classifier needs at least 2 classes");
    }
    if (use_gating && rows < 2) {
        throw Error("gating needs landscape input with more than one row");
    }
    if (pooled_lengths().back() == 0) {
        throw Error("input width " + std::to_string(cols) + " is too short for three pooling stages of width " +
                    std::to_string(pool_width));
    }
}

std::array<std::size_t, 3> ModelConfig::pooled_lengths() const {
    std::array<std::size_t, 3> out{};
    std::size_t len = cols;
    for (auto& l : out) {
        len /= pool_width;
        l = len;
    }
    return out;
}

std::size_t ModelConfig::flat_features() const {
    return rows * conv_channels.back() * pooled_lengths().back();
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"rows", c.rows},
                       {"cols", c.cols},
                       {"conv_channels", c.conv_channels},
                       {"kernel_width", c.kernel_width},
                       {"pool_width", c.pool_width},
                       {"dense_hidden", c.dense_hidden},
                       {"num_classes", c.num_classes},
                       {"use_gating", c.use_gating},
                       {"seed", c.seed},
                       {"precision", c.precision}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    ModelConfig d;
    c.rows = j.value("rows", d.rows);
    c.cols = j.value("cols", d.cols);
    c.conv_channels = j.value("conv_channels", d.conv_channels);
    c.kernel_width = j.value("kernel_width", d.kernel_width);
    c.pool_width = j.value("pool_width", d.pool_width);
    c.dense_hidden = j.value("dense_hidden", d.dense_hidden);
    c.num_classes = j.value("num_classes", d.num_classes);
    c.use_gating = j.value("use_gating", d.use_gating);
    c.seed = j.value("seed", d.seed);
    c.precision = d.precision;
    if (j.contains("precision")) {
        const auto name = j.at("precision").get<std::string>();
        if (name != "f64" && name != "f32") {
            throw Error("precision must be \"f64\" or \"f32\", got \"" + name + "\"");
        }
        c.precision = j.at("precision").get<Precision>();
    }
}

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || lr_drop_every == 0 || folds == 0) {
        throw Error("epochs, batch size, lr drop period and folds must be positive");
    }
    if (!(lr0 > 0.0) || !(lr_drop_factor > 0.0)) {
        throw Error("learning rate and drop factor must be positive");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("train fraction must lie in (0, 1)");
    }
}

double TrainConfig::learning_rate(std::size_t epoch) const {
    return lr0 / std::pow(lr_drop_factor, static_cast<double>(epoch / lr_drop_every));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"epochs", c.epochs},
                       {"lr0", c.lr0},
                       {"lr_drop_every", c.lr_drop_every},
                       {"lr_drop_factor", c.lr_drop_factor},
                       {"batch_size", c.batch_size},
                       {"folds", c.folds},
                       {"train_fraction", c.train_fraction},
                       {"seed", c.seed},
                       {"jobs", c.jobs}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.lr0 = j.value("lr0", d.lr0);
    c.lr_drop_every = j.value("lr_drop_every", d.lr_drop_every);
    c.lr_drop_factor = j.value("lr_drop_factor", d.lr_drop_factor);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.folds = j.value("folds", d.folds);
    c.train_fraction = j.value("train_fraction", d.train_fraction);
    c.seed = j.value("seed", d.seed);
    c.jobs = j.value("jobs", d.jobs);
}

// ---------------------------------------------------------------------------
// Parameters

Parameters Parameters::zeros_like(const Parameters& p) {
    Parameters z;
    for (std::size_t i = 0; i < 3; ++i) {
        z.conv_w[i] = MatrixXd::Zero(p.conv_w[i].rows(), p.conv_w[i].cols());
        z.conv_b[i] = VectorXd::Zero(p.conv_b[i].size());
    }
    z.gate_raw = VectorXd::Zero(p.gate_raw.size());
    z.dense1_w = MatrixXd::Zero(p.dense1_w.rows(), p.dense1_w.cols());
    z.dense1_b = VectorXd::Zero(p.dense1_b.size());
    z.dense2_w = MatrixXd::Zero(p.dense2_w.rows(), p.dense2_w.cols());
    z.dense2_b = VectorXd::Zero(p.dense2_b.size());
    return z;
}

void Parameters::add_scaled(const Parameters& g, double scale) {
    for (std::size_t i = 0; i < 3; ++i) {
        conv_w[i] += scale * g.conv_w[i];
        conv_b[i] += scale * g.conv_b[i];
    }
    gate_raw += scale * g.gate_raw;
    dense1_w += scale * g.dense1_w;
    dense1_b += scale * g.dense1_b;
    dense2_w += scale * g.dense2_w;
    dense2_b += scale * g.dense2_b;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for_each([&](const char*, std::span<const double> v) { n += v.size(); });
    return n;
}

namespace {

template <typename Tensor>
std::span<double> as_span(Tensor& t) {
    return {t.data(), static_cast<std::size_t>(t.size())};
}

template <typename Tensor>
std::span<const double> as_span(const Tensor& t) {
    return {t.data(), static_cast<std::size_t>(t.size())};
}

const char* const kConvW[3] = {"conv1.weight", "conv2.weight", "conv3.weight"};
const char* const kConvB[3] = {"conv1.bias", "conv2.bias", "conv3.bias"};

} // namespace

void Parameters::for_each(const std::function<void(const char*, std::span<double>)>& fn) {
    for (std::size_t i = 0; i < 3; ++i) {
        fn(kConvW[i], as_span(conv_w[i]));
        fn(kConvB[i], as_span(conv_b[i]));
    }
    fn("gate.raw", as_span(gate_raw));
    fn("dense1.weight", as_span(dense1_w));
    fn("dense1.bias", as_span(dense1_b));
    fn("dense2.weight", as_span(dense2_w));
    fn("dense2.bias", as_span(dense2_b));
}

void Parameters::for_each(const std::function<void(const char*, std::span<const double>)>& fn) const {
    for (std::size_t i = 0; i < 3; ++i) {
        fn(kConvW[i], as_span(conv_w[i]));
        fn(kConvB[i], as_span(conv_b[i]));
    }
    fn("gate.raw", as_span(gate_raw));
    fn("dense1.weight", as_span(dense1_w));
    fn("dense1.bias", as_span(dense1_b));
    fn("dense2.weight", as_span(dense2_w));
    fn("dense2.bias", as_span(dense2_b));
}

// ---------------------------------------------------------------------------
// Samples

std::span<const double> SampleSet::sample(std::size_t i) const {
    const std::size_t w = rows * cols;
    return std::span<const double>(values).subspan(i * w, w);
}

void SampleSet::validate() const {
    if (rows == 0 || cols == 0) {
        throw Error("sample shape must be nonzero");
    }
    if (values.size() != labels.size() * rows * cols) {
        throw Error("sample storage does not match shape and count");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw Error("sample " + std::to_string(i) + " has a label outside [0, " + std::to_string(num_classes) +
                        ")");
        }
    }
}

SampleSet SampleSet::from_signals(const Dataset& d) {
    d.validate();
    SampleSet s;
    s.rows = 1;
    s.cols = d.length();
    s.num_classes = d.class_count;
    s.values.reserve(d.size() * s.cols);
    for (const auto& sig : d.signals) {
        s.values.insert(s.values.end(), sig.values.begin(), sig.values.end());
        s.labels.push_back(*sig.label);
    }
    return s;
}

SampleSet SampleSet::from_stacks(const StackFile& f) {
    if (f.stacks.empty()) {
        throw Error("no landscape stacks");
    }
    SampleSet s;
    s.rows = f.stacks.front().levels();
    s.cols = f.stacks.front().width();
    s.num_classes = f.class_count;
    s.values.reserve(f.stacks.size() * s.rows * s.cols);
    for (const auto& st : f.stacks) {
        if (st.levels() != s.rows || st.width() != s.cols) {
            throw Error("landscape stacks differ in shape");
        }
        s.values.insert(s.values.end(), st.data().begin(), st.data().end());
    }
    s.labels = f.labels;
    s.validate();
    return s;
}

Batch Batch::gather(const SampleSet& s, std::span<const std::size_t> indices) {
    Batch b;
    b.inputs.reserve(indices.size());
    b.labels.reserve(indices.size());
    for (const auto i : indices) {
        b.inputs.push_back(s.sample(i));
        b.labels.push_back(s.labels[i]);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Network

GatedModel::GatedModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    auto fill = [&](auto& tensor, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < tensor.size(); ++i) {
            tensor.data()[i] = u(rng);
        }
    };
    std::size_t in_ch = 1;
    for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t out_ch = cfg_.conv_channels[s];
        const std::size_t fan_in = in_ch * cfg_.kernel_width;
        params_.conv_w[s].resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(out_ch));
        fill(params_.conv_w[s], fan_in);
        params_.conv_b[s] = VectorXd::Zero(static_cast<Eigen::Index>(out_ch));
        in_ch = out_ch;
    }
    params_.gate_raw = VectorXd::Zero(cfg_.use_gating ? static_cast<Eigen::Index>(cfg_.rows) : 0);
    const auto features = cfg_.flat_features();
    params_.dense1_w.resize(static_cast<Eigen::Index>(cfg_.dense_hidden), static_cast<Eigen::Index>(features));
    fill(params_.dense1_w, features);
    params_.dense1_b = VectorXd::Zero(static_cast<Eigen::Index>(cfg_.dense_hidden));
    params_.dense2_w.resize(static_cast<Eigen::Index>(cfg_.num_classes), static_cast<Eigen::Index>(cfg_.dense_hidden));
    fill(params_.dense2_w, cfg_.dense_hidden);
    params_.dense2_b = VectorXd::Zero(static_cast<Eigen::Index>(cfg_.num_classes));
}

std::vector<double> GatedModel::gates() const {
    std::vector<double> out;
    for (Eigen::Index r = 0; r < params_.gate_raw.size(); ++r) {
        out.push_back(logistic(params_.gate_raw[r]));
    }
    return out;
}
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Parameters in the compute precision, with the gate already squashed.
template <typename T>
struct Weights {
    std::array<Mat<T>, 3> conv_w;
    std::array<Vec<T>, 3> conv_b;
    Vec<T> gate;
    Mat<T> dense1_w;
    Vec<T> dense1_b;
    Mat<T> dense2_w;
    Vec<T> dense2_b;

    Weights(const Parameters& p, const ModelConfig& cfg) {
        for (std::size_t s = 0; s < 3; ++s) {
            conv_w[s] = p.conv_w[s].cast<T>();
            conv_b[s] = p.conv_b[s].cast<T>();
        }
        gate = Vec<T>::Ones(static_cast<Eigen::Index>(cfg.rows));
        if (cfg.use_gating) {
            for (Eigen::Index r = 0; r < gate.size(); ++r) {
                gate[r] = static_cast<T>(logistic(p.gate_raw[r]));
            }
        }
        dense1_w = p.dense1_w.cast<T>();
        dense1_b = p.dense1_b.cast<T>();
        dense2_w = p.dense2_w.cast<T>();
        dense2_b = p.dense2_b.cast<T>();
    }
};

// Activations are (positions x channels), column-major. The position index is
// (sample * rows + row) * length + t, so every input row is a contiguous
// "line" that convolution and pooling never cross.
template <typename T>
struct Cache {
    std::size_t batch = 0;
    std::array<Mat<T>, 3> cols;                     // im2col of each stage input
    std::array<Mat<T>, 3> pooled;                   // relu(maxpool(conv)) per stage
    std::array<std::vector<Eigen::Index>, 3> argmax; // winning conv row per pooled entry
    Mat<T> features;                                // flat_features x batch, gated
    Mat<T> hidden;                                  // post-ReLU
};

template <typename T>
void im2col(const Mat<T>& in, std::size_t lines, std::size_t len, std::size_t kw, Mat<T>& out) {
    const auto in_ch = static_cast<std::size_t>(in.cols());
    out.resize(static_cast<Eigen::Index>(lines * len), static_cast<Eigen::Index>(in_ch * kw));
    const auto pad = static_cast<std::ptrdiff_t>((kw - 1) / 2);
    const auto L = static_cast<std::ptrdiff_t>(len);
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
        const T* src = in.col(static_cast<Eigen::Index>(ci)).data();
        for (std::size_t j = 0; j < kw; ++j) {
            T* dst = out.col(static_cast<Eigen::Index>(ci * kw + j)).data();
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) - pad;
            const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-off, 0, L);
            const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(L - off, lo, L);
            for (std::size_t line = 0; line < lines; ++line) {
                T* d = dst + line * len;
                const T* s = src + line * len;
                std::fill(d, d + lo, T(0));
                std::copy(s + lo + off, s + hi + off, d + lo);
                std::fill(d + hi, d + L, T(0));
            }
        }
    }
}

template <typename T>
void col2im_add(const Mat<T>& grad_cols, std::size_t lines, std::size_t len, std::size_t kw, Mat<T>& grad_in) {
    const auto in_ch = static_cast<std::size_t>(grad_in.cols());
    const auto pad = static_cast<std::ptrdiff_t>((kw - 1) / 2);
    const auto L = static_cast<std::ptrdiff_t>(len);
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
        T* dst = grad_in.col(static_cast<Eigen::Index>(ci)).data();
        for (std::size_t j = 0; j < kw; ++j) {
            const T* src = grad_cols.col(static_cast<Eigen::Index>(ci * kw + j)).data();
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) - pad;
            const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-off, 0, L);
            const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(L - off, lo, L);
            for (std::size_t line = 0; line < lines; ++line) {
                T* d = dst + line * len + off;
                const T* s = src + line * len;
                for (std::ptrdiff_t t = lo; t < hi; ++t) {
                    d[t] += s[t];
                }
            }
        }
    }
}

/// relu(max over each window). ReLU and max commute, so pooling the
/// pre-activations first does the same work on fewer values.
template <typename T>
void relu_max_pool(const Mat<T>& in, std::size_t lines, std::size_t len, std::size_t width, Mat<T>& out,
                   std::vector<Eigen::Index>* argmax) {
    const std::size_t out_len = len / width;
    const auto channels = in.cols();
    out.resize(static_cast<Eigen::Index>(lines * out_len), channels);
    if (argmax) {
        argmax->resize(static_cast<std::size_t>(out.size()));
    }
    for (Eigen::Index c = 0; c < channels; ++c) {
        const T* src = in.col(c).data();
        T* dst = out.col(c).data();
        Eigen::Index* arg = argmax ? argmax->data() + c * out.rows() : nullptr;
        for (std::size_t line = 0; line < lines; ++line) {
            for (std::size_t u = 0; u < out_len; ++u) {
                const std::size_t first = line * len + u * width;
                std::size_t best = first;
                for (std::size_t q = first + 1; q < first + width; ++q) {
                    if (src[q] > src[best]) {
                        best = q;
                    }
                }
                dst[line * out_len + u] = std::max(src[best], T(0));
                if (arg) {
                    arg[line * out_len + u] = static_cast<Eigen::Index>(best);
                }
            }
        }
    }
}

/// Gradient of relu_max_pool: each pooled gradient goes to its window's
/// winner when the pooled value is positive; every other entry is zero.
template <typename T>
void unpool(const Mat<T>& grad, const Mat<T>& pooled, const std::vector<Eigen::Index>& argmax, std::size_t lines,
            std::size_t len, std::size_t width, Mat<T>& out) {
    const std::size_t out_len = len / width;
    out.resize(static_cast<Eigen::Index>(lines * len), grad.cols());
    for (Eigen::Index c = 0; c < grad.cols(); ++c) {
        const T* g = grad.col(c).data();
        const T* p = pooled.col(c).data();
        const Eigen::Index* arg = argmax.data() + c * grad.rows();
        T* d = out.col(c).data();
        for (std::size_t line = 0; line < lines; ++line) {
            T* row = d + line * len;
            std::fill(row, row + len, T(0));
            for (std::size_t u = 0; u < out_len; ++u) {
                const std::size_t k = line * out_len + u;
                if (p[k] > T(0)) {
                    d[arg[k]] = g[k];
                }
            }
        }
    }
}

template <typename T>
Mat<T> forward_pass(const ModelConfig& cfg, const Weights<T>& w, std::span<const std::span<const double>> inputs,
                    Cache<T>* cache) {
    const std::size_t B = inputs.size();
    const std::size_t R = cfg.rows;
    const std::size_t lines = B * R;
    if (B == 0) {
        throw Error("empty batch");
    }
    Mat<T> x(static_cast<Eigen::Index>(lines * cfg.cols), 1);
    for (std::size_t b = 0; b < B; ++b) {
        if (inputs[b].size() != R * cfg.cols) {
            throw Error("input has " + std::to_string(inputs[b].size()) + " values, model expects " +
                        std::to_string(R) + "x" + std::to_string(cfg.cols));
        }
        std::transform(inputs[b].begin(), inputs[b].end(), x.data() + b * R * cfg.cols,
                       [](double v) { return static_cast<T>(v); });
    }

    Mat<T> cols;
    Mat<T> pre;
    std::size_t len = cfg.cols;
    for (std::size_t s = 0; s < 3; ++s) {
        Mat<T>& c = cache ? cache->cols[s] : cols;
        im2col(x, lines, len, cfg.kernel_width, c);
        pre.noalias() = c * w.conv_w[s];
        pre.rowwise() += w.conv_b[s].transpose();
        relu_max_pool(pre, lines, len, cfg.pool_width, x, cache ? &cache->argmax[s] : nullptr);
        if (cache) {
            cache->pooled[s] = x;
        }
        len /= cfg.pool_width;
    }

    // Flatten each sample row by row, so row r owns the contiguous feature
    // block [r * C3 * len, (r + 1) * C3 * len), scaled by its gate.
    const auto C3 = static_cast<std::size_t>(x.cols());
    Mat<T> flat(static_cast<Eigen::Index>(R * C3 * len), static_cast<Eigen::Index>(B));
    for (std::size_t b = 0; b < B; ++b) {
        T* f = flat.col(static_cast<Eigen::Index>(b)).data();
        for (std::size_t r = 0; r < R; ++r) {
            const T g = w.gate[static_cast<Eigen::Index>(r)];
            for (std::size_t c = 0; c < C3; ++c) {
                const T* src = x.col(static_cast<Eigen::Index>(c)).data() + (b * R + r) * len;
                T* dst = f + (r * C3 + c) * len;
                for (std::size_t u = 0; u < len; ++u) {
                    dst[u] = g * src[u];
                }
            }
        }
    }

    Mat<T> hidden = w.dense1_w * flat;
    hidden.colwise() += w.dense1_b;
    hidden = hidden.cwiseMax(T(0));
    Mat<T> logits = w.dense2_w * hidden;
    logits.colwise() += w.dense2_b;

    if (cache) {
        cache->batch = B;
        cache->features = std::move(flat);
        cache->hidden = std::move(hidden);
    }
    return logits;
}

template <typename T>
Mat<T> softmax_columns(const Mat<T>& logits) {
    Mat<T> p = logits;
    for (Eigen::Index b = 0; b < p.cols(); ++b) {
        auto col = p.col(b);
        col.array() -= col.maxCoeff();
        col = col.array().exp().matrix();
        col /= col.sum();
    }
    return p;
}

template <typename T>
double log_prob(const Mat<T>& logits, Eigen::Index b, Eigen::Index cls) {
    const auto col = logits.col(b).template cast<double>();
    const double top = col.maxCoeff();
    return col[cls] - top - std::log((col.array() - top).exp().sum());
}

void check_labels(const Batch& batch, std::size_t classes) {
    if (batch.inputs.empty() || batch.inputs.size() != batch.labels.size()) {
        throw Error("batch must be nonempty with one label per input");
    }
    for (const int l : batch.labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= classes) {
            throw Error("label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
        }
    }
}

template <typename T>
MatrixXd logits_as(const ModelConfig& cfg, const Parameters& p, std::span<const std::span<const double>> inputs) {
    const Weights<T> w(p, cfg);
    return forward_pass<T>(cfg, w, inputs, nullptr).template cast<double>();
}

template <typename T>
double backward_pass(const ModelConfig& cfg, const Parameters& params, const Batch& batch, Parameters& grads) {
    const Weights<T> w(params, cfg);
    Cache<T> cache;
    const Mat<T> z = forward_pass<T>(cfg, w, batch.inputs, &cache);
    const std::size_t B = cache.batch;
    const std::size_t R = cfg.rows;
    const std::size_t lines = B * R;
    const T inv_b = T(1) / static_cast<T>(B);

    double total = 0.0;
    Mat<T> dz = softmax_columns<T>(z);
    for (std::size_t b = 0; b < B; ++b) {
        const auto y = static_cast<Eigen::Index>(batch.labels[b]);
        total -= log_prob<T>(z, static_cast<Eigen::Index>(b), y);
        dz(y, static_cast<Eigen::Index>(b)) -= T(1);
    }
    dz *= inv_b;

    grads.dense2_w = (dz * cache.hidden.transpose()).template cast<double>();
    grads.dense2_b = dz.rowwise().sum().template cast<double>();
    Mat<T> dh = w.dense2_w.transpose() * dz;
    dh = (cache.hidden.array() > T(0)).select(dh, T(0));
    grads.dense1_w = (dh * cache.features.transpose()).template cast<double>();
    grads.dense1_b = dh.rowwise().sum().template cast<double>();
    const Mat<T> dflat = w.dense1_w.transpose() * dh;

    // Undo the flatten and the gate.
    const Mat<T>& last = cache.pooled[2];
    const auto C3 = static_cast<std::size_t>(last.cols());
    const auto lens = cfg.pooled_lengths();
    const std::size_t len3 = lens[2];
    Mat<T> dx(last.rows(), last.cols());
    std::vector<double> dgate(R, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const T* f = dflat.col(static_cast<Eigen::Index>(b)).data();
        for (std::size_t r = 0; r < R; ++r) {
            const T g = w.gate[static_cast<Eigen::Index>(r)];
            T acc = 0;
            for (std::size_t c = 0; c < C3; ++c) {
                const T* src = f + (r * C3 + c) * len3;
                const std::size_t pos = (b * R + r) * len3;
                const T* a = last.col(static_cast<Eigen::Index>(c)).data() + pos;
                T* d = dx.col(static_cast<Eigen::Index>(c)).data() + pos;
                for (std::size_t u = 0; u < len3; ++u) {
                    d[u] = g * src[u];
                    acc += src[u] * a[u];
                }
            }
            dgate[r] += static_cast<double>(acc);
        }
    }
    grads.gate_raw = VectorXd::Zero(params.gate_raw.size());
    if (cfg.use_gating) {
        for (std::size_t r = 0; r < R; ++r) {
            const double g = logistic(params.gate_raw[static_cast<Eigen::Index>(r)]);
            grads.gate_raw[static_cast<Eigen::Index>(r)] = dgate[r] * g * (1.0 - g);
        }
    }

    const std::array<std::size_t, 3> in_lens{cfg.cols, lens[0], lens[1]};
    Mat<T> dpre;
    for (std::size_t s = 3; s-- > 0;) {
        unpool<T>(dx, cache.pooled[s], cache.argmax[s], lines, in_lens[s], cfg.pool_width, dpre);
        grads.conv_w[s] = (cache.cols[s].transpose() * dpre).template cast<double>();
        grads.conv_b[s] = dpre.colwise().sum().transpose().template cast<double>();
        if (s > 0) {
            const Mat<T> dcols = dpre * w.conv_w[s].transpose();
            dx = Mat<T>::Zero(static_cast<Eigen::Index>(lines * in_lens[s]),
                              static_cast<Eigen::Index>(cfg.conv_channels[s - 1]));
            col2im_add<T>(dcols, lines, in_lens[s], cfg.kernel_width, dx);
        }
    }
    return total / static_cast<double>(B);
}

} // namespace

MatrixXd GatedModel::logits(std::span<const std::span<const double>> inputs) const {
    return cfg_.precision == Precision::f32 ? logits_as<float>(cfg_, params_, inputs)
                                            : logits_as<double>(cfg_, params_, inputs);
}

MatrixXd GatedModel::predict(std::span<const std::span<const double>> inputs) const {
    return softmax_columns<double>(logits(inputs));
}

double GatedModel::loss(const Batch& batch) const {
    check_labels(batch, cfg_.num_classes);
    const MatrixXd z = logits(batch.inputs);
    double total = 0.0;
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
        total -= log_prob<double>(z, b, batch.labels[static_cast<std::size_t>(b)]);
    }
    return total / static_cast<double>(z.cols());
}

double GatedModel::loss_and_gradients(const Batch& batch, Parameters& grads) const {
    check_labels(batch, cfg_.num_classes);
    return cfg_.precision == Precision::f32 ? backward_pass<float>(cfg_, params_, batch, grads)
                                            : backward_pass<double>(cfg_, params_, batch, grads);
}

std::vector<double> forward(const GatedModel& m, std::span<const double> input) {
    const std::span<const double> one[1] = {input};
    const MatrixXd p = m.predict(one);
    return {p.data(), p.data() + p.size()};
}

double evaluate(const GatedModel& m, const SampleSet& s, std::span<const std::size_t> indices) {
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(s.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        indices = all;
    }
    if (indices.empty()) {
        throw Error("accuracy of an empty dataset is undefined");
    }
    constexpr std::size_t chunk = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        const auto part = indices.subspan(start, std::min(chunk, indices.size() - start));
        const auto batch = Batch::gather(s, part);
        const MatrixXd z = m.logits(batch.inputs);
        for (Eigen::Index b = 0; b < z.cols(); ++b) {
            Eigen::Index best = 0;
            z.col(b).maxCoeff(&best);
            correct += best == batch.labels[static_cast<std::size_t>(b)] ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::pair<double, double> mean_std(std::span<const double> v) {
    if (v.empty()) {
        return {0.0, 0.0};
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

} // namespace

GatedModel fit(const SampleSet& data, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
               std::span<const std::size_t> train_idx, std::uint64_t seed, std::size_t fold,
               const std::function<void(const EpochLog&)>& on_epoch, double* final_loss) {
    if (train_idx.empty()) {
        throw Error("empty training split");
    }
    ModelConfig cfg = model_cfg;
    cfg.seed = splitmix64(seed);
    GatedModel model(cfg);
    std::mt19937_64 rng(splitmix64(seed ^ 0x5bd1e995ULL));
    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    Parameters grads = Parameters::zeros_like(model.params());
    double epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        const double lr = train_cfg.learning_rate(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t n = std::min(train_cfg.batch_size, order.size() - start);
            const auto batch = Batch::gather(data, std::span<const std::size_t>(order).subspan(start, n));
            sum += model.loss_and_gradients(batch, grads) * static_cast<double>(n);
            model.params().add_scaled(grads, -lr);
        }
        epoch_loss = sum / static_cast<double>(order.size());
        if (on_epoch) {
            on_epoch({fold, epoch, lr, epoch_loss});
        }
    }
    if (final_loss) {
        *final_loss = epoch_loss;
    }
    return model;
}

TrainResult train(const SampleSet& data, ModelConfig model_cfg, const TrainConfig& train_cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    data.validate();
    train_cfg.validate();
    model_cfg.rows = data.rows;
    model_cfg.cols = data.cols;
    model_cfg.num_classes = data.num_classes;
    model_cfg.validate();

    const FoldPlan plan = train_cfg.folds >= 2
                              ? make_folds(data.labels, data.num_classes, train_cfg.folds, train_cfg.seed)
                              : make_holdout(data.labels, data.num_classes, train_cfg.train_fraction, train_cfg.seed);
    const std::size_t runs = train_cfg.folds >= 2 ? train_cfg.folds : 1;

    TrainResult result;
    result.fold_models.resize(runs);
    std::vector<double> acc(runs, 0.0);
    std::vector<double> final_loss(runs, 0.0);
    std::vector<std::exception_ptr> errors(runs);
    std::mutex log_mutex;
    std::function<void(const EpochLog&)> log;
    if (on_epoch) {
        log = [&](const EpochLog& e) {
            const std::lock_guard lock(log_mutex);
            on_epoch(e);
        };
    }

    auto run_fold = [&](std::size_t f) {
        try {
            const auto train_idx = plan.train_indices(f);
            const auto test_idx = plan.test_indices(f);
            auto model = fit(data, model_cfg, train_cfg, train_idx, train_cfg.seed * 1000003ULL + f, f, log,
                             &final_loss[f]);
            acc[f] = evaluate(model, data, test_idx);
            result.fold_models[f] = std::move(model);
        } catch (...) {
            errors[f] = std::current_exception();
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(train_cfg.jobs, static_cast<unsigned>(runs)));
    if (jobs == 1) {
        for (std::size_t f = 0; f < runs; ++f) {
            run_fold(f);
        }
    } else {
        for (std::size_t start = 0; start < runs; start += jobs) {
            std::vector<std::thread> pool;
            for (std::size_t f = start; f < std::min(runs, start + jobs); ++f) {
                pool.emplace_back(run_fold, f);
            }
            for (auto& t : pool) {
                t.join();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    FitReport& rep = result.report;
    rep.fold_accuracy = acc;
    std::tie(rep.mean, rep.std) = mean_std(acc);
    rep.fold_final_loss = final_loss;
    rep.model = model_cfg;
    rep.train = train_cfg;
    rep.test_size = plan.test_indices(0).size();
    rep.train_size = plan.train_indices(0).size();
    if (model_cfg.use_gating) {
        for (const auto& m : result.fold_models) {
            rep.fold_gates.push_back(m.gates());
        }
        for (std::size_t r = 0; r < model_cfg.rows; ++r) {
            std::vector<double> col;
            for (const auto& g : rep.fold_gates) {
                col.push_back(g[r]);
            }
            const auto [m, s] = mean_std(col);
            rep.gating_mean.push_back(m);
            rep.gating_std.push_back(s);
        }
    }
    return result;
}

void to_json(nlohmann::json& j, const FitReport& r) {
    j = nlohmann::json{{"fold_accuracy", r.fold_accuracy},
                       {"mean", r.mean},
                       {"std", r.std},
                       {"gating_mean", r.gating_mean},
                       {"gating_std", r.gating_std},
                       {"fold_gates", r.fold_gates},
                       {"fold_final_loss", r.fold_final_loss},
                       {"train_size", r.train_size},
                       {"test_size", r.test_size},
                       {"model", r.model},
                       {"train", r.train}};
}

void from_json(const nlohmann::json& j, FitReport& r) {
    r = {};
    r.fold_accuracy = j.at("fold_accuracy").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.gating_mean = j.value("gating_mean", std::vector<double>{});
    r.gating_std = j.value("gating_std", std::vector<double>{});
    r.fold_gates = j.value("fold_gates", std::vector<std::vector<double>>{});
    r.fold_final_loss = j.value("fold_final_loss", std::vector<double>{});
    r.train_size = j.value("train_size", std::size_t{0});
    r.test_size = j.value("test_size", std::size_t{0});
    if (j.contains("model")) {
        r.model = j.at("model").get<ModelConfig>();
    }
    if (j.contains("train")) {
        r.train = j.at("train").get<TrainConfig>();
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void write_checkpoint(const std::filesystem::path& path, const GatedModel& m) {
    std::string bytes = "PLGCKPT1";
    auto put = [&](const void* p, std::size_t n) { bytes.append(static_cast<const char*>(p), n); };
    put(&kCheckpointVersion, sizeof kCheckpointVersion);
    const std::string cfg = nlohmann::json(m.config()).dump();
    const auto cfg_len = static_cast<std::uint64_t>(cfg.size());
    put(&cfg_len, sizeof cfg_len);
    bytes += cfg;
    m.params().for_each([&](const char*, std::span<const double> v) {
        const auto n = static_cast<std::uint64_t>(v.size());
        put(&n, sizeof n);
        put(v.data(), v.size_bytes());
    });
    write_file_atomic(path, bytes);
}

GatedModel read_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    std::size_t pos = 0;
    auto take = [&](void* dst, std::size_t n) {
        if (bytes.size() - pos < n) {
            throw Error(path.string() + ": truncated checkpoint");
        }
        std::memcpy(dst, bytes.data() + pos, n);
        pos += n;
    };
    if (bytes.compare(0, 8, "PLGCKPT1") != 0) {
        throw Error(path.string() + ": not a plgate checkpoint");
    }
    pos = 8;
    std::uint32_t version = 0;
    take(&version, sizeof version);
    if (version != kCheckpointVersion) {
        throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    std::uint64_t cfg_len = 0;
    take(&cfg_len, sizeof cfg_len);
    std::string cfg(cfg_len, '\0');
    take(cfg.data(), cfg_len);
    GatedModel m(nlohmann::json::parse(cfg).get<ModelConfig>());
    m.params().for_each([&](const char* name, std::span<double> v) {
        std::uint64_t n = 0;
        take(&n, sizeof n);
        if (n != v.size()) {
            throw Error(path.string() + ": parameter " + name + " has " + std::to_string(n) + " values, expected " +
                        std::to_string(v.size()));
        }
        take(v.data(), v.size_bytes());
    });
    if (pos != bytes.size()) {
        throw Error(path.string() + ": trailing bytes in checkpoint");
    }
    return m;
}

} // namespace plgate
