#pragma once

#include <Eigen/Core>
#include <random>

#include "lgobs/types.hpp"

// SO(3) and so(3) numerics. All functions are pure and thread-safe.

namespace lgobs {

/// Element of SO(3). Construction through from_matrix() checks
/// ||m m^T - I||_F <= tol and |det(m) - 1| <= tol.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m, double tol = kRotationTolerance);
  /// Skips the orthogonality check. Only for matrices that are rotations by
  /// construction (products and exponentials of rotations).
  static Rotation unchecked(const Mat3& m) { return Rotation(m); }

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose()); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool operator==(const Rotation&) const = default;

  static constexpr double kRotationTolerance = 1e-9;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Skew matrix with hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat. Throws ValidationError when ||m + m^T||_F > tol.
Vec3 vee(const Mat3& m, double tol = 1e-9);

/// Rodrigues formula. Below kSmallAngle the two coefficients switch to
/// their Taylor expansions.
Rotation exp_so3(const Vec3& v);

/// Right Jacobian of exp_so3: exp(v + dv) ~= exp(v) exp(hat(J_r(v) dv)).
Mat3 right_jacobian_so3(const Vec3& v);

struct So3Log {
  Vec3 v;
  /// True when theta >= pi - kNearPi and the axis came from the
  /// eigenvector branch. The sign of v is then ambiguous up to 2*pi.
  bool near_pi = false;
};

So3Log log_so3_detailed(const Rotation& r);
inline Vec3 log_so3(const Rotation& r) { return log_so3_detailed(r).v; }

/// Rotation angle in [0, pi].
double rotation_angle(const Rotation& r);

/// ||m m^T - I||_F. Zero exactly on O(3).
double manifold_distance(const Mat3& m);

/// Column-major vec(R): (R00, R10, R20, R01, R11, R21, R02, R12, R22).
Vec9 embed(const Rotation& r);
Vec9 embed(const Mat3& m);
/// Inverse of embed; validates the result as a rotation.
Rotation unembed(const Vec9& e, double tol = Rotation::kRotationTolerance);

/// Haar-uniform rotation from a normalized 4-Gaussian quaternion.
Rotation random_rotation(std::mt19937_64& rng);

/// Nearest rotation in Frobenius norm (polar factor U V^T of the SVD).
Rotation project_to_so3(const Mat3& m);

inline constexpr double kSmallAngle = 1e-4;
inline constexpr double kNearPi = 1e-6;

}  // namespace lgobs
