#include "lgobs/observer.hpp"

#include <sstream>

#include "lgobs/errors.hpp"

namespace lgobs {

TangentUpdate TangentUpdate::from_vector(const Eigen::Ref<const VectorXd>& v) {
  if (v.size() != 12) throw ValidationError("TangentUpdate: expected 12 components");
  return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6), v.segment<3>(9)};
}

Vec12 TangentUpdate::to_vector() const {
  Vec12 out;
  out << alpha, beta, gamma, delta;
  return out;
}

Vec36 pack_input(const EstimateState& est, const MeasurementFrame& y) {
  Vec36 x;
  x << est.embedded(), y.embedded();
  return x;
}

PackedInput unpack_input(const Vec36& x) {
  PackedInput out;
  out.estimate.R = unembed(x.segment<9>(0));
  out.estimate.p = x.segment<3>(9);
  out.estimate.bias_omega = x.segment<3>(12);
  out.estimate.bias_v = x.segment<3>(15);
  out.measurement.R = Eigen::Map<const Mat3>(x.data() + 18);
  out.measurement.p = x.segment<3>(27);
  out.measurement.omega = x.segment<3>(30);
  out.measurement.v = x.segment<3>(33);
  return out;
}

EstimateState apply_update(const EstimateState& est, const TangentUpdate& v) {
  EstimateState out;
  out.R = est.R * exp_so3(v.alpha);
  out.p = est.p + v.beta;
  out.bias_omega = v.gamma;
  out.bias_v = v.delta;
  return out;
}

NetworkObserver::NetworkObserver(const ObserverParams& params) : params_(params) { reset(); }

void NetworkObserver::reset() {
  h1_ = VectorXd::Zero(params_.dims().hidden);
  h2_ = VectorXd::Zero(params_.dims().hidden);
}

TangentUpdate NetworkObserver::step(const EstimateState& est, const MeasurementFrame& y) {
  auto out = network_forward(params_, pack_input(est, y), h1_, h2_);
  h1_ = std::move(out.h1);
  h2_ = std::move(out.h2);
  return TangentUpdate::from_vector(out.v);
}

namespace {

void check_finite(const VectorXd& v, std::size_t epoch) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "observer produced a non-finite update at epoch " << epoch;
    throw NumericError(os.str());
  }
}

}  // namespace

std::vector<EstimateState> rollout(Observer& obs, std::span<const MeasurementFrame> measurements,
                                   const EstimateState& x0) {
  obs.reset();
  std::vector<EstimateState> out;
  out.reserve(measurements.size());
  EstimateState est = x0;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    const auto v = obs.step(est, measurements[k]);
    check_finite(v.to_vector(), k + 1);
    est = apply_update(est, v);
    out.push_back(est);
  }
  return out;
}

std::vector<EstimateState> rollout(const ObserverParams& params,
                                   std::span<const MeasurementFrame> measurements,
                                   const EstimateState& x0) {
  NetworkObserver obs(params);
  return rollout(obs, measurements, x0);
}

RecordedRollout rollout_recorded(const ObserverParams& params,
                                 std::span<const MeasurementFrame> measurements,
                                 const EstimateState& x0) {
  const auto d = params.dims();
  const auto steps = static_cast<Index>(measurements.size());
  RecordedRollout rec;
  rec.tape.net = NetworkTape(d, steps);
  rec.tape.R_prev.reserve(measurements.size());
  rec.tape.alpha.reserve(measurements.size());
  rec.tape.increment.reserve(measurements.size());
  rec.estimates.reserve(measurements.size());

  VectorXd h1 = VectorXd::Zero(d.hidden);
  VectorXd h2 = VectorXd::Zero(d.hidden);
  EstimateState est = x0;
  for (Index k = 0; k < steps; ++k) {
    auto out = network_forward(params, pack_input(est, measurements[k]), h1, h2, rec.tape.net, k);
    check_finite(out.v, static_cast<std::size_t>(k) + 1);
    h1 = std::move(out.h1);
    h2 = std::move(out.h2);

    const auto v = TangentUpdate::from_vector(out.v);
    const Rotation inc = exp_so3(v.alpha);
    rec.tape.R_prev.push_back(est.R.matrix());
    rec.tape.alpha.push_back(v.alpha);
    rec.tape.increment.push_back(inc.matrix());

    est.R = est.R * inc;
    est.p += v.beta;
    est.bias_omega = v.gamma;
    est.bias_v = v.delta;
    rec.estimates.push_back(est);
  }
  return rec;
}

ObserverParams backward(const ObserverParams& params, const RolloutTape& tape,
                        std::span<const EstimateAdjoint> upstream) {
  const auto steps = tape.net.steps();
  if (static_cast<Index>(upstream.size()) != steps || tape.net.gru1.x.rows() != params.dims().input ||
      tape.net.head_in.rows() != params.dims().hidden)
    throw ValidationError("backward: tape does not match parameters or upstream gradient");

  NetworkBackward net(params, tape.net);
  EstimateAdjoint carry;  // contribution of later network inputs to the current estimate
  VectorXd grad_v(12);
  for (Index k = steps - 1; k >= 0; --k) {
    const auto& up = upstream[static_cast<std::size_t>(k)];
    const Mat3 gR_next = up.R + carry.R;
    const Vec3 gp_next = up.p + carry.p;

    const auto uk = static_cast<std::size_t>(k);
    const Mat3& E = tape.increment[uk];
    const Mat3 S = E.transpose() * tape.R_prev[uk].transpose() * gR_next;  // E^T dL/dE
    const Vec3 gw(S(2, 1) - S(1, 2), S(0, 2) - S(2, 0), S(1, 0) - S(0, 1));

    grad_v << right_jacobian_so3(tape.alpha[uk]).transpose() * gw, gp_next,
        up.bias_omega + carry.bias_omega, up.bias_v + carry.bias_v;
    const VectorXd gx = net.step(k, grad_v);

    carry.R = gR_next * E.transpose() + Eigen::Map<const Mat3>(gx.data());
    carry.p = gp_next + gx.segment<3>(9);
    carry.bias_omega = gx.segment<3>(12);
    carry.bias_v = gx.segment<3>(15);
  }
  return net.gradients();
}

}  // namespace lgobs
