#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lgobs/checkpoint.hpp"
#include "lgobs/observer.hpp"
#include "lgobs/sim.hpp"

namespace lgobs {

/// L = 1/(18 M) sum_{k=1..M} ||R_est - R||_F^2 + ||p_est - p||^2
///     + ||b_omega_est - b_omega||^2 + ||b_v_est - b_v||^2.
/// `estimates[i]` and `truths[i]` both refer to epoch i+1.
double sequence_loss(std::span<const EstimateState> estimates,
                     std::span<const RigidBodyState> truths);

/// dL/d(estimate) for every epoch of sequence_loss.
std::vector<EstimateAdjoint> sequence_loss_gradient(std::span<const EstimateState> estimates,
                                                    std::span<const RigidBodyState> truths);

/// Truth states aligned with rollout output (epochs 1..M).
std::span<const RigidBodyState> aligned_truths(const Sequence& seq);

struct LossAndGradient {
  double loss = 0.0;
  ObserverParams grad;
};

/// Loss and exact parameter gradient for a single sequence.
LossAndGradient sequence_loss_and_gradient(const ObserverParams& params, const Sequence& seq);

/// Batch mean of sequence losses and gradients. Partial sums are formed over
/// fixed groups of sequences and reduced in order, so the result is bitwise
/// independent of `threads`.
LossAndGradient batch_loss_and_gradient(const ObserverParams& params,
                                        std::span<const Sequence* const> batch,
                                        std::size_t threads);

/// Mean sequence loss over `sequences`. Does not modify anything.
double validate(const ObserverParams& params, std::span<const Sequence> sequences,
                std::size_t threads = 1);
double validate(Observer& observer, std::span<const Sequence> sequences);

struct TrainConfig {
  AdamWConfig optim;
  std::size_t batch_size = 64;
  std::size_t max_iters = 30;  // passes over the training split
  double clip_norm = 10.0;     // <= 0 disables clipping
  Index hidden = 64;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::filesystem::path checkpoint_dir;  // empty: no files written

  void validate() const;
};

struct TrainHistory {
  double initial_val_loss = 0.0;
  std::vector<double> train_loss;  // per iteration, mean over the pass
  std::vector<double> val_loss;    // per iteration, after the pass
  std::size_t best_iteration = 0;  // 0 = initial parameters

  double best_val_loss() const;
  /// "iteration train_loss val_loss" per line, iteration 0 first.
  std::string to_text() const;
};

struct IterationReport {
  std::size_t iteration;
  double train_loss;
  double val_loss;
  bool improved;
};

struct TrainResult {
  ObserverParams params;  // parameters of the best validation checkpoint
  TrainHistory history;
  Checkpoint best;
};

/// Mini-batch AdamW over whole sequences with best-validation checkpoint
/// selection. With checkpoint_dir set, writes iter_<n>.ckpt on every
/// improvement, best.ckpt and history.txt.
TrainResult train(std::span<const Sequence> train_set, std::span<const Sequence> val_set,
                  const TrainConfig& cfg,
                  const std::function<void(const IterationReport&)>& on_iteration = {});

}  // namespace lgobs
