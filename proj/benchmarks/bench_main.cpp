#include <benchmark/benchmark.h>

#include <random>

#include "trigan/autodiff/ops.hpp"
#include "trigan/data/synthetic.hpp"
#include "trigan/training/trainers.hpp"

namespace {

using namespace trigan;

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = false) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.values()) v = u(rng);
    return t;
}

// Discriminator-style stride-2 4x4 convolution, forward and backward.
void BM_Conv2d(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const auto channels = static_cast<std::size_t>(state.range(1));
    std::mt19937_64 rng(1);
    Tensor x = random_tensor({10, channels, size, size}, rng, true);
    Tensor w = random_tensor({2 * channels, channels, 4, 4}, rng, true);
    for (auto _ : state) {
        Graph g;
        const Tensor y = ops::conv2d(g, x, w, {}, {2, 1});
        g.backward(ops::sum(g, y));
        benchmark::DoNotOptimize(w.grad().data());
    }
    state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_Conv2d)->Args({32, 16})->Args({16, 32})->Args({64, 16})->Unit(benchmark::kMillisecond);

// Generator-style stride-2 4x4 transposed convolution, forward and backward.
void BM_Conv2dTranspose(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const auto channels = static_cast<std::size_t>(state.range(1));
    std::mt19937_64 rng(2);
    Tensor x = random_tensor({10, channels, size, size}, rng, true);
    Tensor w = random_tensor({channels, channels / 2, 4, 4}, rng, true);
    for (auto _ : state) {
        Graph g;
        const Tensor y = ops::conv2d_transpose(g, x, w, {}, {2, 1});
        g.backward(ops::sum(g, y));
        benchmark::DoNotOptimize(w.grad().data());
    }
    state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_Conv2dTranspose)->Args({8, 64})->Args({16, 32})->Unit(benchmark::kMillisecond);

struct Setup {
    Player g, d, c;
    LabeledBatch batch;
};

Setup make_setup(std::size_t image_size, std::size_t width) {
    auto player = [&](Role role, std::uint64_t seed) {
        NetworkSpec spec;
        spec.role = role;
        spec.image_size = image_size;
        spec.base_width = width;
        Player p{build_network(spec), AdamState{}};
        init_weights(p.net, seed);
        return p;
    };
    SyntheticSpec data;
    data.image_size = image_size;
    data.n_per_class = 5;
    const Dataset ds = make_synthetic(data);
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return {player(Role::generator, 1), player(Role::discriminator, 2), player(Role::classifier, 3),
            make_batch(ds, idx)};
}

void BM_TriGanStep(benchmark::State& state) {
    Setup s = make_setup(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    Rng rng(4);
    for (auto _ : state) benchmark::DoNotOptimize(tri_gan_step(s.batch, s.g, s.d, s.c, {}, {}, rng));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch.size()));
}
BENCHMARK(BM_TriGanStep)->Args({32, 16})->Args({64, 64})->Unit(benchmark::kMillisecond);

void BM_VanillaStep(benchmark::State& state) {
    Setup s = make_setup(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(vanilla_step(s.batch, s.c));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch.size()));
}
BENCHMARK(BM_VanillaStep)->Args({32, 16})->Args({64, 64})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
