#include "lgobs/sim.hpp"

#include <array>
#include <boost/numeric/odeint.hpp>
#include <sstream>

#include "lgobs/errors.hpp"

namespace lgobs {

namespace {

namespace odeint = boost::numeric::odeint;

// vec(R) (column-major) followed by p.
using OdeState = std::array<double, 12>;

void pack(const RigidBodyState& x, OdeState& s) {
  Eigen::Map<Mat3>(s.data()) = x.R.matrix();
  Eigen::Map<Vec3>(s.data() + 9) = x.p;
}

Vec3 uniform_vec3(std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = u(rng);
  return out;
}

Vec3 gaussian_vec3(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = sigma * n(rng);
  return out;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

DynamicsRate dynamics_rhs(const Mat3& R, const VelocityInput& u) {
  return {R * hat(u.omega), R * u.v};
}

RigidBodyState integrate_epoch(const RigidBodyState& x, const VelocityInput& u, double dt,
                               double tolerance) {
  if (!(dt > 0.0)) throw ValidationError("integrate_epoch: dt must be positive");

  auto rhs = [&u](const OdeState& s, OdeState& ds, double /*t*/) {
    const auto rate = dynamics_rhs(Eigen::Map<const Mat3>(s.data()), u);
    Eigen::Map<Mat3>(ds.data()) = rate.R_dot;
    Eigen::Map<Vec3>(ds.data() + 9) = rate.p_dot;
  };

  OdeState s;
  pack(x, s);
  try {
    auto stepper =
        odeint::make_controlled<odeint::runge_kutta_dopri5<OdeState>>(tolerance, tolerance);
    odeint::integrate_adaptive(stepper, rhs, s, 0.0, dt, dt);
  } catch (const odeint::odeint_error& e) {
    std::ostringstream os;
    os << "integrate_epoch: RK5(4) failed to reach tolerance " << tolerance << ": " << e.what();
    throw NumericError(os.str());
  }

  const Eigen::Map<const Mat3> R_end(s.data());
  if (!R_end.allFinite()) throw NumericError("integrate_epoch: non-finite state");

  RigidBodyState out = x;
  out.R = project_to_so3(R_end);
  out.p = Eigen::Map<const Vec3>(s.data() + 9);
  return out;
}

MeasurementFrame measure(const RigidBodyState& x, const VelocityInput& u, double sigma,
                         std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw ValidationError("measure: sigma must be non-negative");
  // Noise is drawn even for sigma = 0 so trajectories do not depend on sigma.
  const Vec3 w1 = gaussian_vec3(rng, sigma);
  const Vec3 w2 = gaussian_vec3(rng, sigma);
  const Vec3 w3 = gaussian_vec3(rng, sigma);
  const Vec3 w4 = gaussian_vec3(rng, sigma);

  MeasurementFrame y;
  y.R = sigma == 0.0 ? x.R.matrix() : (x.R * exp_so3(w1)).matrix();
  y.p = x.p + w2;
  y.omega = u.omega + x.bias_omega + w3;
  y.v = u.v + x.bias_v + w4;
  return y;
}

Sequence generate_sequence(const SimConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);

  Sequence seq;
  seq.meta.seed = seed;
  seq.meta.dt = cfg.dt;
  seq.meta.sigma = cfg.sigma;
  seq.states.reserve(cfg.length + 1);
  seq.velocities.reserve(cfg.length);
  seq.measurements.reserve(cfg.length);

  RigidBodyState x;
  x.R = random_rotation(rng);
  x.p = uniform_vec3(rng, cfg.position_range);
  x.bias_omega = uniform_vec3(rng, cfg.bias_range);
  x.bias_v = uniform_vec3(rng, cfg.bias_range);
  seq.states.push_back(x);

  for (std::size_t k = 0; k < cfg.length; ++k) {
    VelocityInput u;
    u.omega = uniform_vec3(rng, cfg.velocity_range);
    u.v = uniform_vec3(rng, cfg.velocity_range);
    x = integrate_epoch(x, u, cfg.dt, cfg.tolerance);
    seq.velocities.push_back(u);
    seq.states.push_back(x);
    seq.measurements.push_back(measure(x, u, cfg.sigma, rng));
  }
  return seq;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

}  // namespace lgobs
