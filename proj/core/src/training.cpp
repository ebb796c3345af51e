#include "lgobs/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "lgobs/binary_io.hpp"
#include "lgobs/errors.hpp"
#include "lgobs/parallel.hpp"

namespace lgobs {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b || a == 0) {
    std::ostringstream os;
    os << "sequence_loss: length mismatch (" << a << " estimates, " << b << " truths)";
    throw ValidationError(os.str());
  }
}

constexpr std::size_t kReductionGroups = 8;

void add_into(ObserverParams& acc, const ObserverParams& g) {
  auto a = acc.tensors();
  const auto b = g.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void scale(ObserverParams& p, double s) {
  for (auto t : p.tensors()) t *= s;
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

double sequence_loss(std::span<const EstimateState> estimates,
                     std::span<const RigidBodyState> truths) {
  check_lengths(estimates.size(), truths.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    const auto& t = truths[k];
    sum += (e.R.matrix() - t.R.matrix()).squaredNorm() + (e.p - t.p).squaredNorm() +
           (e.bias_omega - t.bias_omega).squaredNorm() + (e.bias_v - t.bias_v).squaredNorm();
  }
  return sum / (18.0 * static_cast<double>(estimates.size()));
}

std::vector<EstimateAdjoint> sequence_loss_gradient(std::span<const EstimateState> estimates,
                                                    std::span<const RigidBodyState> truths) {
  check_lengths(estimates.size(), truths.size());
  const double c = 2.0 / (18.0 * static_cast<double>(estimates.size()));
  std::vector<EstimateAdjoint> out(estimates.size());
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    const auto& t = truths[k];
    out[k].R = c * (e.R.matrix() - t.R.matrix());
    out[k].p = c * (e.p - t.p);
    out[k].bias_omega = c * (e.bias_omega - t.bias_omega);
    out[k].bias_v = c * (e.bias_v - t.bias_v);
  }
  return out;
}

std::span<const RigidBodyState> aligned_truths(const Sequence& seq) {
  return std::span<const RigidBodyState>(seq.states).subspan(1);
}

LossAndGradient sequence_loss_and_gradient(const ObserverParams& params, const Sequence& seq) {
  const auto rec = rollout_recorded(params, seq.measurements);
  const auto truths = aligned_truths(seq);
  LossAndGradient out;
  out.loss = sequence_loss(rec.estimates, truths);
  out.grad = backward(params, rec.tape, sequence_loss_gradient(rec.estimates, truths));
  return out;
}

LossAndGradient batch_loss_and_gradient(const ObserverParams& params,
                                        std::span<const Sequence* const> batch,
                                        std::size_t threads) {
  if (batch.empty()) throw ValidationError("batch_loss_and_gradient: empty batch");
  const std::size_t groups = std::min(kReductionGroups, batch.size());
  std::vector<LossAndGradient> partial(groups);
  parallel_for(groups, threads, [&](std::size_t g) {
    const std::size_t begin = batch.size() * g / groups;
    const std::size_t end = batch.size() * (g + 1) / groups;
    auto acc = sequence_loss_and_gradient(params, *batch[begin]);
    for (std::size_t i = begin + 1; i < end; ++i) {
      auto lg = sequence_loss_and_gradient(params, *batch[i]);
      acc.loss += lg.loss;
      add_into(acc.grad, lg.grad);
    }
    partial[g] = std::move(acc);
  });
  LossAndGradient total = std::move(partial[0]);
  for (std::size_t g = 1; g < groups; ++g) {
    total.loss += partial[g].loss;
    add_into(total.grad, partial[g].grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  scale(total.grad, inv);
  return total;
}

double validate(const ObserverParams& params, std::span<const Sequence> sequences,
                std::size_t threads) {
  if (sequences.empty()) throw ValidationError("validate: empty validation set");
  std::vector<double> losses(sequences.size());
  parallel_for(sequences.size(), threads, [&](std::size_t i) {
    losses[i] = sequence_loss(rollout(params, sequences[i].measurements), aligned_truths(sequences[i]));
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

double validate(Observer& observer, std::span<const Sequence> sequences) {
  if (sequences.empty()) throw ValidationError("validate: empty validation set");
  double sum = 0.0;
  for (const auto& seq : sequences)
    sum += sequence_loss(rollout(observer, seq.measurements), aligned_truths(seq));
  return sum / static_cast<double>(sequences.size());
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("train config: " + m); };
  if (!(optim.lr > 0.0)) fail("learning rate must be positive");
  if (!(optim.weight_decay >= 0.0)) fail("weight decay must be non-negative");
  if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0) || !(optim.beta2 >= 0.0 && optim.beta2 < 1.0))
    fail("betas must lie in [0, 1)");
  if (!(optim.eps > 0.0)) fail("eps must be positive");
  if (batch_size == 0) fail("batch size must be positive");
  if (hidden <= 0) fail("hidden size must be positive");
  if (threads == 0) fail("threads must be positive");
}

double TrainHistory::best_val_loss() const {
  return best_iteration == 0 ? initial_val_loss : val_loss.at(best_iteration - 1);
}

std::string TrainHistory::to_text() const {
  std::ostringstream os;
  os << "# iteration train_loss val_loss\n";
  os << 0 << ' ' << "nan" << ' ' << format_double(initial_val_loss) << '\n';
  for (std::size_t i = 0; i < train_loss.size(); ++i)
    os << i + 1 << ' ' << format_double(train_loss[i]) << ' ' << format_double(val_loss[i]) << '\n';
  return os.str();
}

TrainResult train(std::span<const Sequence> train_set, std::span<const Sequence> val_set,
                  const TrainConfig& cfg,
                  const std::function<void(const IterationReport&)>& on_iteration) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("train: empty training split");
  if (val_set.empty()) throw ValidationError("train: empty validation split");

  const bool write_files = !cfg.checkpoint_dir.empty();
  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + cfg.checkpoint_dir.string());
  }

  NetworkDims dims;
  dims.hidden = cfg.hidden;
  std::mt19937_64 init_rng(derive_seed(cfg.seed, 0x1a17, 0));
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5e9, 0));

  TrainResult result;
  ObserverParams params = init_params(init_rng, dims);
  OptimizerState opt = OptimizerState::zeros(dims);

  auto snapshot = [&](std::uint64_t iteration) {
    std::ostringstream rng_state;
    rng_state << shuffle_rng;
    return Checkpoint{params, opt, iteration, rng_state.str()};
  };
  auto ckpt_name = [](std::size_t iteration) {
    std::ostringstream os;
    os << "iter_" << std::setw(5) << std::setfill('0') << iteration << ".ckpt";
    return os.str();
  };

  result.history.initial_val_loss = validate(params, val_set, cfg.threads);
  if (!std::isfinite(result.history.initial_val_loss))
    throw NumericError("train: non-finite validation loss at initialization");
  result.best = snapshot(0);
  double best = result.history.initial_val_loss;
  if (write_files) {
    write_checkpoint(cfg.checkpoint_dir / ckpt_name(0), result.best);
    write_checkpoint(cfg.checkpoint_dir / "best.ckpt", result.best);
  }

  std::vector<const Sequence*> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = &train_set[i];

  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - b);
      const std::span<const Sequence* const> batch(order.data() + b, n);
      auto where = [&] {
        std::ostringstream os;
        os << "iteration " << iter << ", batch " << b / cfg.batch_size
           << " (first sequence index " << batch.front()->meta.index << ")";
        return os.str();
      };
      LossAndGradient lg;
      try {
        lg = batch_loss_and_gradient(params, batch, cfg.threads);
      } catch (const NumericError& e) {
        throw NumericError("train: " + std::string(e.what()) + " in " + where());
      }
      if (!std::isfinite(lg.loss) || !lg.grad.all_finite())
        throw NumericError("train: non-finite loss in " + where());
      loss_sum += lg.loss * static_cast<double>(n);
      if (cfg.clip_norm > 0.0) clip_grad_norm(lg.grad, cfg.clip_norm);
      adamw_step(params, lg.grad, opt, cfg.optim);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    const double val_loss = validate(params, val_set, cfg.threads);
    if (!std::isfinite(val_loss)) {
      std::ostringstream os;
      os << "train: non-finite validation loss after iteration " << iter;
      throw NumericError(os.str());
    }
    result.history.train_loss.push_back(train_loss);
    result.history.val_loss.push_back(val_loss);

    const bool improved = val_loss < best;
    if (improved) {
      best = val_loss;
      result.history.best_iteration = iter;
      result.best = snapshot(iter);
      if (write_files) {
        write_checkpoint(cfg.checkpoint_dir / ckpt_name(iter), result.best);
        write_checkpoint(cfg.checkpoint_dir / "best.ckpt", result.best);
      }
    }
    if (write_files)
      io::write_file_atomic(cfg.checkpoint_dir / "history.txt", result.history.to_text());
    if (on_iteration) on_iteration({iter, train_loss, val_loss, improved});
  }

  if (write_files) io::write_file_atomic(cfg.checkpoint_dir / "history.txt", result.history.to_text());
  result.params = result.best.params;
  return result;
}

}  // namespace lgobs
