#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include "lgobs/dataset.hpp"
#include "lgobs/errors.hpp"
#include "lgobs/eval.hpp"
#include "support/stubs.hpp"

namespace lgobs {
namespace {

namespace fs = std::filesystem;

std::vector<Sequence> make_sequences(std::size_t count, std::size_t length, std::uint64_t seed,
                                     double sigma) {
  SimConfig cfg;
  cfg.length = length;
  cfg.sigma = sigma;
  return generate_sequences(cfg, seed, 0, 0, count, 1);
}

ObserverParams small_params(Index hidden, std::uint64_t seed) {
  NetworkDims d;
  d.hidden = hidden;
  std::mt19937_64 rng(seed);
  return init_params(rng, d);
}

double mean(const std::vector<double>& v, std::size_t skip = 0) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(skip), v.end(), 0.0) /
         static_cast<double>(v.size() - skip);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(EvaluateSequence, OracleHasZeroEstimationError) {
  const auto seq = make_sequences(1, 30, 1, 0.1)[0];
  test::OracleObserver oracle(seq);
  const auto t = evaluate_sequence(oracle, seq);
  ASSERT_EQ(t.size(), 30u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LT(t.rot_est[k], 1e-9);
    EXPECT_LT(t.pos_est[k], 1e-9);
    EXPECT_EQ(t.bias_omega[k], 0.0);
    EXPECT_EQ(t.bias_v[k], 0.0);
    EXPECT_GT(t.rot_meas[k], 0.0);
  }
}

TEST(EvaluateSequence, ChannelsAreNonNegativeAndMeasurementIndependentOfParams) {
  const auto seq = make_sequences(1, 50, 2, 0.2)[0];
  const auto a = evaluate_sequence(small_params(4, 1), seq);
  const auto b = evaluate_sequence(small_params(6, 2), seq);
  EXPECT_EQ(a.rot_meas, b.rot_meas);
  EXPECT_EQ(a.pos_meas, b.pos_meas);
  for (const auto* c : a.channels()) {
    ASSERT_EQ(c->size(), 50u);
    for (double v : *c) EXPECT_GE(v, 0.0);
  }
  for (double m : a.manifold) EXPECT_LE(m, 1e-6);
  EXPECT_EQ(a.channels().size(), ErrorTrace::channel_names().size());

  // Measurement channel of epoch k compares y_k with the state it observes.
  EXPECT_DOUBLE_EQ(a.rot_meas[4], (seq.measurements[4].R - seq.states[5].R.matrix()).norm());
}

TEST(MonteCarlo, SingletonIsTraceMean) {
  const auto seqs = make_sequences(1, 20, 3, 0.1);
  const auto p = small_params(4, 3);
  const auto t = evaluate_sequence(p, seqs[0]);
  const auto mc = monte_carlo(p, seqs, 0);
  EXPECT_NEAR(mc.mean.rot_est, mean(t.rot_est), 1e-14);
  EXPECT_NEAR(mc.mean.pos_meas, mean(t.pos_meas), 1e-14);
  EXPECT_NEAR(mc.mean.bias_v, mean(t.bias_v), 1e-14);
  EXPECT_EQ(mc.mean.samples, 20u);
  EXPECT_EQ(mc.mean_trace.rot_est, t.rot_est);
}

TEST(MonteCarlo, SkipDropsLeadingEpochs) {
  const auto seqs = make_sequences(1, 20, 4, 0.1);
  const auto p = small_params(4, 4);
  const auto t = evaluate_sequence(p, seqs[0]);
  const auto mc = monte_carlo(p, seqs, 10);
  EXPECT_EQ(mc.first_epoch, 11u);
  EXPECT_EQ(mc.mean_trace.size(), 10u);
  EXPECT_NEAR(mc.mean.rot_est, mean(t.rot_est, 10), 1e-14);
  EXPECT_THROW(monte_carlo(p, seqs, 20), ValidationError);
  EXPECT_THROW(monte_carlo(p, std::span<const Sequence>{}, 0), ValidationError);
}

TEST(MonteCarlo, OrderAndThreadInvariant) {
  auto seqs = make_sequences(6, 15, 5, 0.1);
  const auto p = small_params(5, 5);
  const auto a = monte_carlo(p, seqs, 2, 1);
  const auto b = monte_carlo(p, seqs, 2, 3);
  EXPECT_EQ(a.mean.rot_est, b.mean.rot_est);
  EXPECT_EQ(a.mean_trace.pos_est, b.mean_trace.pos_est);
  std::reverse(seqs.begin(), seqs.end());
  const auto c = monte_carlo(p, seqs, 2, 1);
  EXPECT_NEAR(a.mean.rot_est, c.mean.rot_est, 1e-14);
  EXPECT_NEAR(a.mean.bias_omega, c.mean.bias_omega, 1e-13);
}

TEST(ReductionPercent, Definition) {
  EXPECT_DOUBLE_EQ(reduction_percent(0.23, 0.12), 100.0 * 0.11 / 0.23);
  EXPECT_DOUBLE_EQ(reduction_percent(1.0, 2.0), -100.0);
  EXPECT_TRUE(std::isnan(reduction_percent(0.0, 0.1)));
}

TEST(NoiseSweep, NoiselessRowHasZeroMeasurementError) {
  SweepConfig cfg;
  cfg.sequences = 3;
  cfg.length = 20;
  cfg.skip = 5;
  const std::vector<double> sigmas{0.0, 0.2};
  const auto res = noise_sweep(small_params(4, 6), sigmas, cfg);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_EQ(res.rows[0].rot_meas, 0.0);
  EXPECT_EQ(res.rows[0].pos_meas, 0.0);
  EXPECT_GT(res.rows[0].bias_omega, 0.0);
  EXPECT_GT(res.rows[1].rot_meas, 0.0);
  for (const auto& r : res.rows) {
    EXPECT_LE(r.manifold, 1e-6);
    if (r.rot_meas > 0) EXPECT_NEAR(r.rot_reduction, reduction_percent(r.rot_meas, r.rot_est), 0.01);
    if (r.pos_meas > 0) EXPECT_NEAR(r.pos_reduction, reduction_percent(r.pos_meas, r.pos_est), 0.01);
  }
  EXPECT_THROW(noise_sweep(small_params(4, 6), std::vector<double>{-0.1}, cfg), ValidationError);
}

TEST(NoiseSweep, Deterministic) {
  SweepConfig cfg;
  cfg.sequences = 2;
  cfg.length = 15;
  cfg.skip = 2;
  const std::vector<double> sigmas{0.1};
  const auto p = small_params(4, 7);
  const auto a = noise_sweep(p, sigmas, cfg);
  cfg.threads = 2;
  const auto b = noise_sweep(p, sigmas, cfg);
  EXPECT_EQ(sweep_csv(a.rows), sweep_csv(b.rows));
}

TEST(SweepCsv, EmptyIsHeaderOnly) {
  const std::string csv = sweep_csv({});
  EXPECT_EQ(csv,
            "sigma,R_meas,R_est,p_meas,p_est,b_omega_est,b_v_est,R_reduction_pct,"
            "p_reduction_pct,manifold_dist,R_geodesic_rad\n");
  EXPECT_TRUE(parse_sweep_csv(csv).empty());
}

TEST(SweepCsv, RoundTripIsExact) {
  ErrorStats s;
  s.rot_meas = 0.2312345678901234;
  s.rot_est = 0.1198765432109876;
  s.pos_meas = 0.17;
  s.pos_est = 0.16;
  s.bias_omega = 0.21;
  s.bias_v = 0.19;
  s.manifold = 3.3e-14;
  s.rot_geodesic = 0.085;
  std::vector<SweepRow> rows{SweepRow::from_stats(0.1, s), SweepRow::from_stats(0.0, ErrorStats{})};
  const auto back = parse_sweep_csv(sweep_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].rot_meas, rows[0].rot_meas);
  EXPECT_EQ(back[0].rot_reduction, rows[0].rot_reduction);
  EXPECT_EQ(back[0].manifold, rows[0].manifold);
  EXPECT_EQ(back[0].rot_geodesic, rows[0].rot_geodesic);
  EXPECT_TRUE(std::isnan(back[1].rot_reduction));
  EXPECT_THROW(parse_sweep_csv("sigma,R\n"), IoError);
}

TEST(RenderReport, WritesAllFiles) {
  const fs::path dir = fs::temp_directory_path() / "lgobs_report_test";
  fs::remove_all(dir);
  const auto seqs = make_sequences(2, 12, 8, 0.1);
  const auto mc = monte_carlo(small_params(4, 8), seqs, 2);
  std::vector<SweepRow> rows{SweepRow::from_stats(0.1, mc.mean)};
  std::vector<LabeledTrace> traces{{"sigma_0.1", mc.first_epoch, mc.mean_trace}};
  render_report(rows, traces, dir);

  EXPECT_EQ(parse_sweep_csv(slurp(dir / "sweep.csv")).size(), 1u);
  EXPECT_FALSE(slurp(dir / "summary.txt").empty());
  for (const auto& name : ErrorTrace::channel_names()) {
    const std::string text = slurp(dir / "traces" / (name + ".csv"));
    EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,sigma_0.1") << name;
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 10) << name;
    EXPECT_EQ(text.substr(text.find('\n') + 1, 2), "3,") << name;
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace lgobs
