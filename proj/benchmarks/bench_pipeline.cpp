#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "plgate/landscape.hpp"
#include "plgate/model.hpp"
#include "plgate/persistence.hpp"
#include "plgate/reconstruction.hpp"
#include "plgate/signal.hpp"

namespace {

plgate::Signal random_walk(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    std::vector<double> v(n);
    double x = 0.0;
    for (auto& y : v) {
        x += step(rng);
        y = x;
    }
    return plgate::standardize(plgate::Signal(std::move(v)));
}

void BM_SublevelDiagram(benchmark::State& state) {
    const auto s = random_walk(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(plgate::sublevel_diagram(s));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SublevelDiagram)->Arg(140)->Arg(187)->Arg(4096);

void BM_LandscapeStack(benchmark::State& state) {
    const auto d = plgate::sublevel_diagram(random_walk(140, 2));
    const plgate::LandscapeGrid grid{0.0, 1.0, static_cast<std::size_t>(state.range(0))};
    for (auto _ : state) {
        benchmark::DoNotOptimize(plgate::normalize_area(plgate::landscape_stack(d, grid, 10)));
    }
}
BENCHMARK(BM_LandscapeStack)->Arg(100)->Arg(1000);

void BM_Reconstruct(benchmark::State& state) {
    const auto s = random_walk(187, 3);
    const std::vector<std::size_t> levels{1, 2, 3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(plgate::reconstruct_from_levels(s, levels));
    }
}
BENCHMARK(BM_Reconstruct);

struct ModelFixture {
    plgate::SampleSet set;
    plgate::GatedModel model;
    std::vector<std::size_t> idx;

    ModelFixture(std::size_t rows, std::size_t cols, std::size_t batch) {
        set.rows = rows;
        set.cols = cols;
        set.num_classes = 5;
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < rows * cols; ++j) {
                set.values.push_back(u(rng));
            }
            set.labels.push_back(static_cast<int>(i % 5));
            idx.push_back(i);
        }
        plgate::ModelConfig cfg;
        cfg.rows = rows;
        cfg.cols = cols;
        cfg.num_classes = 5;
        cfg.use_gating = rows > 1;
        model = plgate::GatedModel(cfg);
    }
};

// Args: rows, cols. One SGD-sized batch of 64 samples.
void BM_TrainStep(benchmark::State& state) {
    ModelFixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 64);
    const auto batch = plgate::Batch::gather(f.set, f.idx);
    auto grads = plgate::Parameters::zeros_like(f.model.params());
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.model.loss_and_gradients(batch, grads));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainStep)->Args({10, 100})->Args({1, 140})->Args({1, 187})->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
    ModelFixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 64);
    const auto batch = plgate::Batch::gather(f.set, f.idx);
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.model.logits(batch.inputs));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Predict)->Args({10, 100})->Args({1, 140})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
