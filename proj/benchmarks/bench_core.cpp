#include <benchmark/benchmark.h>

#include "ufpgd/channel.hpp"
#include "ufpgd/pgd.hpp"
#include "ufpgd/rng.hpp"
#include "ufpgd/system_config.hpp"
#include "ufpgd/training.hpp"
#include "ufpgd/unfolded.hpp"
#include "ufpgd/zf.hpp"

// Microbenchmarks of the hot paths at the reference problem size
// K = 8 users, M = 64 antennas.

namespace {

ufpgd::SystemConfig bench_system() {
  return ufpgd::SystemConfig::uniform(8, 64, 10.0, 1.0, 1.0);
}

ufpgd::ChannelMatrix bench_channel(const ufpgd::SystemConfig& cfg) {
  ufpgd::Rng rng = ufpgd::Rng::stream(1, 0);
  return ufpgd::generate_channel(cfg, rng);
}

void BM_ZfPrecoder(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::zf_precoder(h, cfg));
  }
}
BENCHMARK(BM_ZfPrecoder);

void BM_ProxL21(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  ufpgd::ComplexMatrix input = h.conjugate();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::prox_l21(input, 0.05));
  }
}
BENCHMARK(BM_ProxL21);

void BM_PgdStep(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  ufpgd::PrecoderMatrix w = h.conjugate();
  const double eta = 1.0 / ufpgd::mp_bound(cfg.K, cfg.M);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::pgd_step(w, h, cfg, 1.0 / 15.0, eta));
  }
}
BENCHMARK(BM_PgdStep);

void BM_SolvePgd(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  ufpgd::PgdParams params;
  params.lambda = 1.0 / 15.0;
  params.eta = 1.0 / ufpgd::mp_bound(cfg.K, cfg.M);
  params.max_iters = state.range(0);
  params.residual_tol = 0.0;
  params.trace_every = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::solve_pgd(h, cfg, params));
  }
}
BENCHMARK(BM_SolvePgd)->Arg(20)->Arg(200);

void BM_ForwardInfer(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  ufpgd::UnfoldedNetwork net = ufpgd::UnfoldedNetwork::pgd_init(
      cfg.K, cfg.M, static_cast<int>(state.range(0)), 1.0 / 15.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::forward_infer(net, h, cfg));
  }
}
BENCHMARK(BM_ForwardInfer)->Arg(20);

void BM_ForwardBackward(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  ufpgd::UnfoldedNetwork net = ufpgd::UnfoldedNetwork::pgd_init(
      cfg.K, cfg.M, static_cast<int>(state.range(0)), 1.0 / 15.0);
  ufpgd::ForwardOptions options;
  options.with_tape = true;
  for (auto _ : state) {
    ufpgd::ForwardResult result = ufpgd::forward(net, h, cfg, std::nullopt, options);
    ufpgd::ComplexMatrix dcost =
        ufpgd::unsupervised_loss_grad(result.output, h, cfg, 1.0 / 15.0);
    benchmark::DoNotOptimize(ufpgd::backward(result.tape, net, h, cfg, dcost));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(20);

void BM_LipschitzBound(benchmark::State& state) {
  ufpgd::SystemConfig cfg = bench_system();
  ufpgd::ChannelMatrix h = bench_channel(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ufpgd::lipschitz_bound(h));
  }
}
BENCHMARK(BM_LipschitzBound);

}  // namespace

BENCHMARK_MAIN();
