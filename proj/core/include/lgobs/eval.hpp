#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lgobs/observer.hpp"
#include "lgobs/sim.hpp"

namespace lgobs {

/// Per-epoch error channels of one rollout (epochs 1..M).
struct ErrorTrace {
  std::vector<double> rot_est;       // ||R - R_est||_F
  std::vector<double> rot_meas;      // ||R^m - R||_F
  std::vector<double> pos_est;       // ||p - p_est||
  std::vector<double> pos_meas;      // ||p^m - p||
  std::vector<double> bias_omega;    // ||b_omega - b_omega_est||
  std::vector<double> bias_v;        // ||b_v - b_v_est||
  std::vector<double> manifold;      // ||R_est R_est^T - I||_F
  std::vector<double> rot_geodesic;  // angle of R^T R_est in rad (convenience, not Frobenius)

  std::size_t size() const { return rot_est.size(); }

  static const std::vector<std::string>& channel_names();
  std::vector<const std::vector<double>*> channels() const;
  std::vector<std::vector<double>*> channels();
};

ErrorTrace evaluate_sequence(Observer& observer, const Sequence& seq);
ErrorTrace evaluate_sequence(const ObserverParams& params, const Sequence& seq);

/// Channel-wise means.
struct ErrorStats {
  double rot_est = 0.0;
  double rot_meas = 0.0;
  double pos_est = 0.0;
  double pos_meas = 0.0;
  double bias_omega = 0.0;
  double bias_v = 0.0;
  double manifold = 0.0;
  double rot_geodesic = 0.0;
  double manifold_max = 0.0;
  std::size_t samples = 0;
};

struct MonteCarloResult {
  ErrorStats mean;         // over all epochs > skip of all sequences
  ErrorTrace mean_trace;   // per-epoch mean across sequences, epochs skip+1..M
  std::size_t first_epoch = 1;
  std::size_t sequences = 0;
};

/// Aggregates traces of equal length, skipping the first `skip` epochs.
MonteCarloResult aggregate_traces(std::span<const ErrorTrace> traces, std::size_t skip);

MonteCarloResult monte_carlo(const ObserverParams& params, std::span<const Sequence> sequences,
                             std::size_t skip, std::size_t threads = 1);

/// 100 (meas - est) / meas; NaN when meas == 0.
double reduction_percent(double meas, double est);

struct SweepRow {
  double sigma = 0.0;
  double rot_meas = 0.0;
  double rot_est = 0.0;
  double pos_meas = 0.0;
  double pos_est = 0.0;
  double bias_omega = 0.0;
  double bias_v = 0.0;
  double rot_reduction = 0.0;  // percent
  double pos_reduction = 0.0;  // percent
  double manifold = 0.0;
  double rot_geodesic = 0.0;

  static SweepRow from_stats(double sigma, const ErrorStats& s);
};

struct SweepConfig {
  std::size_t sequences = 1000;
  std::size_t length = 1000;
  std::size_t skip = 10;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  SimConfig sim;  // sigma and length are overridden per row
};

/// Stream id of the sweep row with index `row`.
inline std::uint64_t sweep_stream(std::size_t row) { return 2000 + row; }

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<MonteCarloResult> details;  // one per row
};

/// Fresh sequences per sigma, generated from cfg.seed, then monte_carlo().
SweepResult noise_sweep(const ObserverParams& params, std::span<const double> sigmas,
                        const SweepConfig& cfg);

/// A mean trace plus the label of its column in the trace CSVs.
struct LabeledTrace {
  std::string label;
  std::size_t first_epoch = 1;
  ErrorTrace trace;
};

/// Writes sweep.csv, traces/<channel>.csv and summary.txt into out_dir.
void render_report(std::span<const SweepRow> rows, std::span<const LabeledTrace> traces,
                   const std::filesystem::path& out_dir);

std::string sweep_csv(std::span<const SweepRow> rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
std::string summary_table(std::span<const SweepRow> rows);

}  // namespace lgobs
