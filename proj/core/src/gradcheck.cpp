#include "lgobs/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lgobs/sim.hpp"
#include "lgobs/training.hpp"

namespace lgobs {

GradCheckReport gradient_check(const GradCheckConfig& cfg) {
  SimConfig sim;
  sim.length = cfg.length;
  sim.sigma = 0.1;
  const Sequence seq = generate_sequence(sim, derive_seed(cfg.seed, 0x9c, 0));

  NetworkDims dims;
  dims.hidden = cfg.hidden;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x9c, 1));
  ObserverParams params = init_params(rng, dims);
  // Non-zero biases so that every tensor is exercised.
  std::normal_distribution<double> gauss(0.0, 0.1);
  for (auto t : params.tensors())
    for (Index i = 0; i < t.size(); ++i)
      if (t[i] == 0.0) t[i] = gauss(rng);

  VectorXd analytic = sequence_loss_and_gradient(params, seq).grad.flatten();
  analytic[analytic.size() / 2] += cfg.corrupt;

  const auto loss_at = [&](const VectorXd& flat) {
    ObserverParams p = params;
    p.assign(flat);
    return sequence_loss(rollout(p, seq.measurements), aligned_truths(seq));
  };

  // Tensor boundaries for reporting.
  std::vector<std::pair<Index, std::string>> bounds;
  {
    Index off = 0;
    const auto names = ObserverParams::tensor_names();
    const auto ts = params.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      bounds.emplace_back(off, names[i]);
      off += ts[i].size();
    }
  }

  const VectorXd base = params.flatten();
  GradCheckReport rep;
  rep.parameters = base.size();
  VectorXd probe = base;
  for (Index i = 0; i < base.size(); ++i) {
    probe[i] = base[i] + cfg.step;
    const double up = loss_at(probe);
    probe[i] = base[i] - cfg.step;
    const double down = loss_at(probe);
    probe[i] = base[i];
    const double numeric = (up - down) / (2.0 * cfg.step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), cfg.floor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (!(err <= rep.max_rel_error)) {
      rep.max_rel_error = err;
      rep.worst_index = i;
      rep.worst_analytic = analytic[i];
      rep.worst_numeric = numeric;
    }
  }
  for (const auto& [off, name] : bounds)
    if (off <= rep.worst_index) rep.worst_tensor = name;
  rep.passed = rep.max_rel_error <= cfg.tolerance;
  return rep;
}

}  // namespace lgobs
