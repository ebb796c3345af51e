#include "lgobs/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lgobs/binary_io.hpp"
#include "lgobs/dataset.hpp"
#include "lgobs/errors.hpp"
#include "lgobs/parallel.hpp"

namespace lgobs {

namespace {

constexpr const char* kSweepHeader =
    "sigma,R_meas,R_est,p_meas,p_est,b_omega_est,b_v_est,R_reduction_pct,p_reduction_pct,"
    "manifold_dist,R_geodesic_rad";

// Shortest text that reads back to the same double.
std::string full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw IoError("bad number in CSV: " + s);
  return v;
}

}  // namespace

const std::vector<std::string>& ErrorTrace::channel_names() {
  static const std::vector<std::string> names = {"rot_est",    "rot_meas", "pos_est",
                                                 "pos_meas",   "bias_omega", "bias_v",
                                                 "manifold",   "rot_geodesic"};
  return names;
}

std::vector<const std::vector<double>*> ErrorTrace::channels() const {
  return {&rot_est, &rot_meas, &pos_est, &pos_meas, &bias_omega, &bias_v, &manifold, &rot_geodesic};
}

std::vector<std::vector<double>*> ErrorTrace::channels() {
  return {&rot_est, &rot_meas, &pos_est, &pos_meas, &bias_omega, &bias_v, &manifold, &rot_geodesic};
}

ErrorTrace evaluate_sequence(Observer& observer, const Sequence& seq) {
  const auto est = rollout(observer, seq.measurements);
  ErrorTrace t;
  for (auto* c : t.channels()) c->reserve(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    const auto& truth = seq.states[k + 1];
    const auto& y = seq.measurements[k];
    const auto& e = est[k];
    t.rot_est.push_back((truth.R.matrix() - e.R.matrix()).norm());
    t.rot_meas.push_back((y.R - truth.R.matrix()).norm());
    t.pos_est.push_back((truth.p - e.p).norm());
    t.pos_meas.push_back((y.p - truth.p).norm());
    t.bias_omega.push_back((truth.bias_omega - e.bias_omega).norm());
    t.bias_v.push_back((truth.bias_v - e.bias_v).norm());
    t.manifold.push_back(manifold_distance(e.R.matrix()));
    t.rot_geodesic.push_back(
        rotation_angle(Rotation::unchecked(truth.R.matrix().transpose() * e.R.matrix())));
  }
  return t;
}

ErrorTrace evaluate_sequence(const ObserverParams& params, const Sequence& seq) {
  NetworkObserver obs(params);
  return evaluate_sequence(obs, seq);
}

MonteCarloResult aggregate_traces(std::span<const ErrorTrace> traces, std::size_t skip) {
  if (traces.empty()) throw ValidationError("monte_carlo: no sequences");
  const std::size_t m = traces.front().size();
  for (const auto& t : traces)
    if (t.size() != m) throw ValidationError("monte_carlo: sequences have different lengths");
  if (skip >= m) throw ValidationError("monte_carlo: skip must be smaller than the sequence length");

  MonteCarloResult r;
  r.first_epoch = skip + 1;
  r.sequences = traces.size();
  const std::size_t len = m - skip;
  for (auto* c : r.mean_trace.channels()) c->assign(len, 0.0);

  const std::size_t nc = ErrorTrace::channel_names().size();
  for (const auto& t : traces) {
    auto dst = r.mean_trace.channels();
    const auto src = t.channels();
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t k = 0; k < len; ++k) (*dst[c])[k] += (*src[c])[skip + k];
    for (std::size_t k = skip; k < m; ++k) r.mean.manifold_max = std::max(r.mean.manifold_max, t.manifold[k]);
  }
  const double inv_n = 1.0 / static_cast<double>(traces.size());
  for (auto* c : r.mean_trace.channels())
    for (double& v : *c) v *= inv_n;

  auto mean_of = [len](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(len);
  };
  const auto& mt = r.mean_trace;
  r.mean.rot_est = mean_of(mt.rot_est);
  r.mean.rot_meas = mean_of(mt.rot_meas);
  r.mean.pos_est = mean_of(mt.pos_est);
  r.mean.pos_meas = mean_of(mt.pos_meas);
  r.mean.bias_omega = mean_of(mt.bias_omega);
  r.mean.bias_v = mean_of(mt.bias_v);
  r.mean.manifold = mean_of(mt.manifold);
  r.mean.rot_geodesic = mean_of(mt.rot_geodesic);
  r.mean.samples = len * traces.size();
  return r;
}

MonteCarloResult monte_carlo(const ObserverParams& params, std::span<const Sequence> sequences,
                             std::size_t skip, std::size_t threads) {
  if (sequences.empty()) throw ValidationError("monte_carlo: no sequences");
  std::vector<ErrorTrace> traces(sequences.size());
  parallel_for(sequences.size(), threads,
               [&](std::size_t i) { traces[i] = evaluate_sequence(params, sequences[i]); });
  return aggregate_traces(traces, skip);
}

double reduction_percent(double meas, double est) {
  if (meas == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (meas - est) / meas;
}

SweepRow SweepRow::from_stats(double sigma, const ErrorStats& s) {
  SweepRow r;
  r.sigma = sigma;
  r.rot_meas = s.rot_meas;
  r.rot_est = s.rot_est;
  r.pos_meas = s.pos_meas;
  r.pos_est = s.pos_est;
  r.bias_omega = s.bias_omega;
  r.bias_v = s.bias_v;
  r.rot_reduction = reduction_percent(s.rot_meas, s.rot_est);
  r.pos_reduction = reduction_percent(s.pos_meas, s.pos_est);
  r.manifold = s.manifold;
  r.rot_geodesic = s.rot_geodesic;
  return r;
}

SweepResult noise_sweep(const ObserverParams& params, std::span<const double> sigmas,
                        const SweepConfig& cfg) {
  if (cfg.length == 0 || cfg.sequences == 0) throw ValidationError("noise_sweep: empty sweep");
  SweepResult out;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    if (!(sigmas[s] >= 0.0)) throw ValidationError("noise_sweep: sigma must be non-negative");
    SimConfig sim = cfg.sim;
    sim.sigma = sigmas[s];
    sim.length = cfg.length;
    const auto seqs = generate_sequences(sim, cfg.seed, sweep_stream(s), 0, cfg.sequences, cfg.threads);
    auto mc = monte_carlo(params, seqs, cfg.skip, cfg.threads);
    out.rows.push_back(SweepRow::from_stats(sigmas[s], mc.mean));
    out.details.push_back(std::move(mc));
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << full(r.sigma) << ',' << full(r.rot_meas) << ',' << full(r.rot_est) << ','
       << full(r.pos_meas) << ',' << full(r.pos_est) << ',' << full(r.bias_omega) << ','
       << full(r.bias_v) << ',' << full(r.rot_reduction) << ',' << full(r.pos_reduction) << ','
       << full(r.manifold) << ',' << full(r.rot_geodesic) << '\n';
  }
  return os.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kSweepHeader) throw IoError("sweep CSV: unexpected header");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(parse_double(cell));
    if (f.size() != 11) throw IoError("sweep CSV: expected 11 columns");
    rows.push_back({f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9], f[10]});
  }
  return rows;
}

std::string summary_table(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "Mean error (epochs after skip), Frobenius norm for rotations\n";
  os << std::setw(6) << "sigma" << std::setw(9) << "R^m" << std::setw(9) << "R_est"
     << std::setw(9) << "p^m" << std::setw(9) << "p_est" << std::setw(9) << "b_w"
     << std::setw(9) << "b_v" << std::setw(10) << "R red%" << std::setw(10) << "p red%"
     << std::setw(12) << "|RR^T-I|" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::setprecision(2) << std::setw(6) << r.sigma << std::setw(9) << r.rot_meas
       << std::setw(9) << r.rot_est << std::setw(9) << r.pos_meas << std::setw(9) << r.pos_est
       << std::setw(9) << r.bias_omega << std::setw(9) << r.bias_v << std::setw(10)
       << r.rot_reduction << std::setw(10) << r.pos_reduction << std::scientific
       << std::setprecision(1) << std::setw(12) << r.manifold << std::fixed << '\n';
  }
  return os.str();
}

void render_report(std::span<const SweepRow> rows, std::span<const LabeledTrace> traces,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "traces", ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());

  io::write_file_atomic(out_dir / "sweep.csv", sweep_csv(rows));

  const auto& names = ErrorTrace::channel_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::ostringstream os;
    os << "epoch";
    for (const auto& t : traces) os << ',' << t.label;
    os << '\n';
    std::size_t len = 0;
    for (const auto& t : traces) len = std::max(len, t.trace.size());
    for (std::size_t k = 0; k < len; ++k) {
      os << (traces.empty() ? k + 1 : traces.front().first_epoch + k);
      for (const auto& t : traces) {
        os << ',';
        const auto& ch = *t.trace.channels()[c];
        if (k < ch.size()) os << full(ch[k]);
      }
      os << '\n';
    }
    io::write_file_atomic(out_dir / "traces" / (names[c] + ".csv"), os.str());
  }
  io::write_file_atomic(out_dir / "summary.txt", summary_table(rows));
}

}  // namespace lgobs
