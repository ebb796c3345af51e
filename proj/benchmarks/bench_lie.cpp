#include <benchmark/benchmark.h>

#include <random>

#include "lgobs/lie.hpp"
#include "lgobs/sim.hpp"

namespace {

using namespace lgobs;

void BM_ExpSo3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 v(u(rng), u(rng), u(rng));
  for (auto _ : state) benchmark::DoNotOptimize(exp_so3(v));
}
BENCHMARK(BM_ExpSo3);

void BM_LogSo3(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Rotation r = random_rotation(rng);
  for (auto _ : state) benchmark::DoNotOptimize(log_so3(r));
}
BENCHMARK(BM_LogSo3);

void BM_RightJacobian(benchmark::State& state) {
  const Vec3 v(0.3, -0.2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(right_jacobian_so3(v));
}
BENCHMARK(BM_RightJacobian);

void BM_IntegrateEpoch(benchmark::State& state) {
  std::mt19937_64 rng(3);
  RigidBodyState x;
  x.R = random_rotation(rng);
  const VelocityInput u{Vec3(0.4, -0.7, 0.2), Vec3(0.1, 0.5, -0.3)};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_epoch(x, u, 0.01));
}
BENCHMARK(BM_IntegrateEpoch);

void BM_GenerateSequence(benchmark::State& state) {
  SimConfig cfg;
  cfg.length = static_cast<std::size_t>(state.range(0));
  cfg.sigma = 0.1;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_sequence(cfg, ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateSequence)->Arg(50)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
