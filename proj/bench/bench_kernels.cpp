#include <benchmark/benchmark.h>

#include <vector>

#include "iflow/kernels.hpp"
#include "iflow/pipeline.hpp"
#include "iflow/rng.hpp"
#include "iflow/siren.hpp"

using namespace iflow;

namespace {

struct Fixture {
    SirenParams params;
    std::vector<double> coords;
    std::vector<double> targets;
    std::vector<double> out;
    std::vector<double> grad;

    Fixture(std::size_t side, std::size_t width) {
        SirenConfig cfg;
        cfg.hidden_layers = 3;
        cfg.width = width;
        params = siren_init(cfg, 0);
        coords = grid_coords(side, side);
        Rng rng(1);
        targets.resize(coords.size());
        for (auto& t : targets) t = rng.uniform(-0.1, 0.1);
        out.resize(coords.size());
        grad.resize(params.params.values.size());
    }
};

template <bool Parallel>
void BM_forward(benchmark::State& state) {
    Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    const auto net = f.params.net();
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::forward(net, f.coords, f.out);
        } else {
            kernels::forward_serial(net, f.coords, f.out);
        }
        benchmark::DoNotOptimize(f.out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <bool Parallel>
void BM_loss_grad(benchmark::State& state) {
    Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    const auto net = f.params.net();
    const kernels::Samples samples{f.coords, f.targets};
    for (auto _ : state) {
        double l = 0.0;
        if constexpr (Parallel) {
            l = kernels::loss_grad(net, samples, kernels::LossMode::squared, 1.0, f.grad);
        } else {
            l = kernels::loss_grad_serial(net, samples, kernels::LossMode::squared, 1.0, f.grad);
        }
        benchmark::DoNotOptimize(l);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
    for (int side : {32, 64}) {
        for (int width : {64, 128}) b->Args({side, width});
    }
    b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_forward, false)->Name("forward/serial")->Apply(sizes);
BENCHMARK_TEMPLATE(BM_forward, true)->Name("forward/parallel")->Apply(sizes);
BENCHMARK_TEMPLATE(BM_loss_grad, false)->Name("loss_grad/serial")->Apply(sizes);
BENCHMARK_TEMPLATE(BM_loss_grad, true)->Name("loss_grad/parallel")->Apply(sizes);

BENCHMARK_MAIN();
