#pragma once

#include "lgobs/lie.hpp"
#include "lgobs/types.hpp"

namespace lgobs {

/// Rigid-body state (R, p, b_omega, b_v). Biases are constant turn-on
/// offsets of the angular- and linear-velocity sensors.
struct RigidBodyState {
  Rotation R;
  Vec3 p = Vec3::Zero();
  Vec3 bias_omega = Vec3::Zero();
  Vec3 bias_v = Vec3::Zero();

  static RigidBodyState identity() { return {}; }

  /// (vec(R), p, b_omega, b_v).
  Vec18 embedded() const;
};

/// The observer's estimate has the same shape as the true state.
using EstimateState = RigidBodyState;

/// Body-frame velocities held constant over one inter-epoch interval.
struct VelocityInput {
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

/// One epoch of sensor output: R^m, p^m, Omega^m, v^m.
struct MeasurementFrame {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  /// (vec(R^m), p^m, Omega^m, v^m).
  Vec18 embedded() const;
};

inline Vec18 RigidBodyState::embedded() const {
  Vec18 out;
  out << embed(R), p, bias_omega, bias_v;
  return out;
}

inline Vec18 MeasurementFrame::embedded() const {
  Vec18 out;
  out << embed(R), p, omega, v;
  return out;
}

}  // namespace lgobs
