#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lgobs/state.hpp"

namespace lgobs {

/// Generation parameters for one sequence.
struct SimConfig {
  std::size_t length = 100;     // M: number of measured epochs
  double dt = 0.01;             // s per epoch
  double sigma = 0.0;           // measurement noise standard deviation
  double bias_range = 10.0;     // biases ~ U[-bias_range, bias_range]^3
  double velocity_range = 1.0;  // Omega, v ~ U[-velocity_range, velocity_range]^3
  double position_range = 1.0;  // p_0 ~ U[-position_range, position_range]^3
  double tolerance = 1e-10;     // RK5(4) local error tolerance
};

struct SequenceMeta {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;  // position within the generating dataset
  double dt = 0.0;
  double sigma = 0.0;
};

/// states[0..M], velocities[0..M-1], measurements[0..M-1].
/// velocities[k] drives states[k] -> states[k+1]; measurements[k] observes
/// states[k+1] together with velocities[k], i.e. it is y_{k+1} in
/// observer indexing.
struct Sequence {
  std::vector<RigidBodyState> states;
  std::vector<VelocityInput> velocities;
  std::vector<MeasurementFrame> measurements;
  SequenceMeta meta;

  std::size_t length() const { return measurements.size(); }
};

struct DynamicsRate {
  Mat3 R_dot;
  Vec3 p_dot;
};

/// R' = R hat(Omega), p' = R v.
DynamicsRate dynamics_rhs(const Mat3& R, const VelocityInput& u);

/// Advances one epoch with adaptive Dormand-Prince RK5(4) on the 12 embedded
/// coordinates, then projects R back onto SO(3). Throws NumericError when the
/// step size collapses.
RigidBodyState integrate_epoch(const RigidBodyState& x, const VelocityInput& u, double dt,
                               double tolerance = 1e-10);

/// R^m = R exp(hat(w1)), p^m = p + w2, Omega^m = Omega + b_omega + w3,
/// v^m = v + b_v + w4 with w_i ~ N(0, sigma^2 I).
MeasurementFrame measure(const RigidBodyState& x, const VelocityInput& u, double sigma,
                         std::mt19937_64& rng);

/// Deterministic in (cfg, seed).
Sequence generate_sequence(const SimConfig& cfg, std::uint64_t seed);

/// Independent substream seed for item `index` of stream `stream`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace lgobs
