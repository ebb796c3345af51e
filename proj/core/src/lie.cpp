#include "lgobs/lie.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lgobs/errors.hpp"

namespace lgobs {

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  if (!m.allFinite()) throw ValidationError("rotation matrix has non-finite entries");
  const double dist = manifold_distance(m);
  const double det = m.determinant();
  if (dist > tol || std::abs(det - 1.0) > tol) {
    std::ostringstream os;
    os << "matrix is not a rotation: ||m m^T - I||_F = " << dist << ", det = " << det;
    throw ValidationError(os.str());
  }
  return Rotation(m);
}

Mat3 hat(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Vec3 vee(const Mat3& m, double tol) {
  const double asym = (m + m.transpose()).norm();
  if (!(asym <= tol)) {
    std::ostringstream os;
    os << "vee: matrix is not skew-symmetric (||M + M^T||_F = " << asym << ")";
    throw ValidationError(os.str());
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

namespace {

struct RodriguesCoeffs {
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return {1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0};
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return {s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta)};
}

}  // namespace

Rotation exp_so3(const Vec3& v) {
  const auto k = rodrigues_coeffs(v.norm());
  const Mat3 w = hat(v);
  return Rotation::unchecked(Mat3::Identity() + k.a * w + k.b * (w * w));
}

Mat3 right_jacobian_so3(const Vec3& v) {
  const auto k = rodrigues_coeffs(v.norm());
  const Mat3 w = hat(v);
  return Mat3::Identity() - k.b * w + k.c * (w * w);
}

So3Log log_so3_detailed(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 skew(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));  // 2 sin(t) u
  const double cos_t = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double sin_t = 0.5 * skew.norm();
  const double theta = std::atan2(sin_t, cos_t);

  if (theta >= std::numbers::pi - kNearPi) {
    // R ~= 2 u u^T - I: u is the eigenvector of the symmetric part with the
    // largest eigenvalue.
    const Mat3 sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
    Vec3 axis = es.eigenvectors().col(2).normalized();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return {theta * axis, true};
  }
  if (theta < kSmallAngle) {
    // t / (2 sin t) ~= 1/2 + t^2/12
    return {(0.5 + theta * theta / 12.0) * skew, false};
  }
  return {(theta / (2.0 * std::sin(theta))) * skew, false};
}

double rotation_angle(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 skew(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double cos_t = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(0.5 * skew.norm(), cos_t);
}

double manifold_distance(const Mat3& m) {
  return (m * m.transpose() - Mat3::Identity()).norm();
}

Vec9 embed(const Mat3& m) { return Eigen::Map<const Vec9>(m.data()); }

Vec9 embed(const Rotation& r) { return embed(r.matrix()); }

Rotation unembed(const Vec9& e, double tol) {
  return Rotation::from_matrix(Eigen::Map<const Mat3>(e.data()), tol);
}

Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    for (int i = 0; i < 4; ++i) q[i] = gauss(rng);
  } while (q.norm() < 1e-12);
  q.normalize();
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return Rotation::unchecked(quat.toRotationMatrix());
}

Rotation project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return Rotation::unchecked(u * v.transpose());
}

}  // namespace lgobs
