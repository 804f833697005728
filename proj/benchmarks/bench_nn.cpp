#include <benchmark/benchmark.h>

#include "lob/nn/train.hpp"
#include "lob/rng.hpp"

using namespace lob;
using namespace lob::nn;

namespace {

Tensor random_batch(size_t b, const ArchitectureSpec& spec, uint64_t seed) {
    Rng rng(seed);
    Tensor x({b, static_cast<size_t>(spec.time), static_cast<size_t>(spec.width)});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    return x;
}

} // namespace

static void BM_Level1Forward(benchmark::State& state) {
    auto model = Model::build(level1(), 1);
    const auto x = random_batch(static_cast<size_t>(state.range(0)), model.spec(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Level1Forward)->Arg(1)->Arg(8);

static void BM_Level1TrainStep(benchmark::State& state) {
    auto model = Model::build(level1(), 1);
    const size_t b = static_cast<size_t>(state.range(0));
    const auto x = random_batch(b, model.spec(), 2);
    std::vector<labeling::Label> labels(b, labeling::Label::Up);
    std::vector<double> grad(model.param_count());
    std::vector<uint64_t> seeds(b);
    for (size_t i = 0; i < b; ++i) seeds[i] = mix64(i);
    Ctx ctx;
    ctx.training = true;
    ctx.sample_seeds = seeds;
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.0);
        benchmark::DoNotOptimize(model.loss_and_gradients(x, labels, ctx, grad));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Level1TrainStep)->Arg(8);

static void BM_FullLobForward(benchmark::State& state) {
    auto model = Model::build(deeplob_full(), 1);
    const auto x = random_batch(1, model.spec(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FullLobForward);

BENCHMARK_MAIN();
