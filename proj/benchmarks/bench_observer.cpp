#include <benchmark/benchmark.h>

#include <random>

#include "lgobs/observer.hpp"
#include "lgobs/sim.hpp"
#include "lgobs/training.hpp"

namespace {

using namespace lgobs;

ObserverParams params_for(Index hidden) {
  NetworkDims d;
  d.hidden = hidden;
  std::mt19937_64 rng(7);
  return init_params(rng, d);
}

Sequence sequence_of(std::size_t length) {
  SimConfig cfg;
  cfg.length = length;
  cfg.sigma = 0.1;
  return generate_sequence(cfg, 11);
}

void BM_NetworkForward(benchmark::State& state) {
  const auto p = params_for(state.range(0));
  const VectorXd x = VectorXd::Random(36);
  const VectorXd h = VectorXd::Zero(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(network_forward(p, x, h, h));
}
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(512);

void BM_Rollout(benchmark::State& state) {
  const auto p = params_for(state.range(0));
  const auto seq = sequence_of(1000);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(p, seq.measurements));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Rollout)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SequenceGradient(benchmark::State& state) {
  const auto p = params_for(state.range(0));
  const auto seq = sequence_of(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(sequence_loss_and_gradient(p, seq));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_SequenceGradient)->Args({64, 50})->Args({512, 100})->Unit(benchmark::kMillisecond);

void BM_AdamWStep(benchmark::State& state) {
  auto p = params_for(state.range(0));
  const auto g = params_for(state.range(0));
  auto opt = OptimizerState::zeros(p.dims());
  for (auto _ : state) adamw_step(p, g, opt, AdamWConfig{});
}
BENCHMARK(BM_AdamWStep)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
