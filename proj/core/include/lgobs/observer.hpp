#pragma once

#include <span>
#include <vector>

#include "lgobs/nn.hpp"
#include "lgobs/state.hpp"

namespace lgobs {

/// Network output v_k = (alpha, beta, gamma, delta). alpha lives in so(3)
/// through hat().
struct TangentUpdate {
  Vec3 alpha = Vec3::Zero();  // rad
  Vec3 beta = Vec3::Zero();   // m
  Vec3 gamma = Vec3::Zero();  // rad/s
  Vec3 delta = Vec3::Zero();  // m/s

  static TangentUpdate from_vector(const Eigen::Ref<const VectorXd>& v);
  Vec12 to_vector() const;
};

/// (vec(R_est), p_est, b_omega_est, b_v_est, vec(R^m), p^m, Omega^m, v^m).
Vec36 pack_input(const EstimateState& est, const MeasurementFrame& y);

struct PackedInput {
  EstimateState estimate;
  MeasurementFrame measurement;
};
PackedInput unpack_input(const Vec36& x);

/// R' = R exp(hat(alpha)), p' = p + beta, b_omega' = gamma, b_v' = delta.
EstimateState apply_update(const EstimateState& est, const TangentUpdate& v);

/// One-step map T(x_k, y_{k+1}) -> v_k with internal recurrent state.
class Observer {
 public:
  virtual ~Observer() = default;
  /// Called at the start of every sequence.
  virtual void reset() = 0;
  virtual TangentUpdate step(const EstimateState& est, const MeasurementFrame& y) = 0;
};

/// GRU/GRU/linear observer. Hidden states start at zero on reset().
class NetworkObserver final : public Observer {
 public:
  explicit NetworkObserver(const ObserverParams& params);

  void reset() override;
  TangentUpdate step(const EstimateState& est, const MeasurementFrame& y) override;

 private:
  const ObserverParams& params_;
  VectorXd h1_, h2_;
};

/// Estimates for epochs 1..M (x0 itself is not included). Throws
/// NumericError naming the epoch when the observer produces a non-finite
/// update.
std::vector<EstimateState> rollout(Observer& obs, std::span<const MeasurementFrame> measurements,
                                   const EstimateState& x0 = EstimateState::identity());
std::vector<EstimateState> rollout(const ObserverParams& params,
                                   std::span<const MeasurementFrame> measurements,
                                   const EstimateState& x0 = EstimateState::identity());

/// Everything the reverse sweep needs from a forward rollout.
struct RolloutTape {
  NetworkTape net;
  std::vector<Mat3> R_prev;     // R_est_k for k = 0..M-1
  std::vector<Vec3> alpha;      // alpha_k
  std::vector<Mat3> increment;  // exp(hat(alpha_k))
};

struct RecordedRollout {
  std::vector<EstimateState> estimates;  // epochs 1..M
  RolloutTape tape;
};

RecordedRollout rollout_recorded(const ObserverParams& params,
                                 std::span<const MeasurementFrame> measurements,
                                 const EstimateState& x0 = EstimateState::identity());

/// dL/d(estimate) for one epoch, in the coordinates of the embedding.
struct EstimateAdjoint {
  Mat3 R = Mat3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 bias_omega = Vec3::Zero();
  Vec3 bias_v = Vec3::Zero();
};

/// Exact reverse-mode gradient of a scalar loss with respect to all network
/// parameters, through the GRU recurrence, the network input (which contains
/// the previous estimate), exp_so3 and the group composition. `upstream[k]`
/// is dL/d(estimate of epoch k+1).
ObserverParams backward(const ObserverParams& params, const RolloutTape& tape,
                        std::span<const EstimateAdjoint> upstream);

}  // namespace lgobs
