#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "lgobs/errors.hpp"
#include "lgobs/lie.hpp"
#include "support/oracles.hpp"

namespace lgobs {
namespace {

using std::numbers::pi;

Mat3 rot_x_90() {
  Mat3 m;
  m << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  return m;
}

TEST(Hat, ZeroVector) { EXPECT_EQ(hat(Vec3::Zero()), Mat3::Zero()); }

TEST(Hat, MatchesCrossProductExpansion) {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat(Vec3(1, 2, 3)), expected);
  EXPECT_EQ(test::cross_matrix(Vec3(1, 2, 3)), expected);
}

TEST(Hat, SkewAndCrossProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = test::random_vec3(rng, -5, 5);
    const Vec3 w = test::random_vec3(rng, -5, 5);
    const Mat3 m = hat(v);
    EXPECT_EQ(m, -m.transpose());
    EXPECT_LT((m * w - v.cross(w)).norm(), 1e-12);
  }
}

TEST(Vee, InvertsHat) {
  EXPECT_EQ(vee(Mat3::Zero()), Vec3::Zero());
  Mat3 m;
  m << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(vee(m), Vec3(1, 2, 3));
  EXPECT_EQ(vee(hat(Vec3(0.3, -0.7, 0.2))), Vec3(0.3, -0.7, 0.2));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = test::random_vec3(rng, -10, 10);
    EXPECT_LT((vee(hat(v)) - v).norm(), 1e-9);
  }
}

TEST(Vee, RejectsNonSkew) {
  Mat3 m = hat(Vec3(1, 2, 3));
  m(0, 0) = 1e-3;
  EXPECT_THROW(vee(m), ValidationError);
  m(0, 0) = 1e-12;
  EXPECT_NO_THROW(vee(m));
}

TEST(ExpSo3, Identity) { EXPECT_EQ(exp_so3(Vec3::Zero()).matrix(), Mat3::Identity()); }

TEST(ExpSo3, QuarterTurnAboutX) {
  const Mat3 oracle = test::taylor_expm(hat(Vec3(pi / 2, 0, 0)));
  EXPECT_LT((oracle - rot_x_90()).norm(), 1e-14);
  EXPECT_LT((exp_so3(Vec3(pi / 2, 0, 0)).matrix() - rot_x_90()).norm(), 1e-15);
}

TEST(ExpSo3, InverseProperty) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = test::random_in_ball(rng, pi);
    EXPECT_LT(((exp_so3(v) * exp_so3(-v)).matrix() - Mat3::Identity()).norm(), 1e-14);
  }
}

TEST(ExpSo3, MatchesTaylorOracleIncludingSmallAngles) {
  std::mt19937_64 rng(6);
  for (double scale : {1e-9, 1e-6, 5e-5, 1e-4, 2e-4, 1e-2, 1.0, pi}) {
    for (int i = 0; i < 50; ++i) {
      const Vec3 v = test::random_in_ball(rng, scale);
      EXPECT_LT((exp_so3(v).matrix() - test::taylor_expm(hat(v))).norm(), 1e-13) << scale;
    }
  }
}

TEST(ExpSo3, StaysOnManifold) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = test::random_in_ball(rng, 10.0);
    EXPECT_LE(manifold_distance(exp_so3(v).matrix()), 1e-12);
  }
}

TEST(RightJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (double scale : {1e-6, 1e-3, 1.0, 3.0}) {
    const Vec3 v = test::random_in_ball(rng, scale);
    const Mat3 J = right_jacobian_so3(v);
    const Mat3 R = exp_so3(v).matrix();
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-6;
      const Vec3 e = Vec3::Unit(j) * h;
      const Mat3 d = (exp_so3(v + e).matrix() - exp_so3(v - e).matrix()) / (2 * h);
      // R^T dR/dv_j = hat(J e_j)
      const Vec3 col = vee(R.transpose() * d, 1e-6);
      EXPECT_LT((col - J.col(j)).norm(), 1e-8) << scale;
    }
  }
}

TEST(LogSo3, Examples) {
  EXPECT_EQ(log_so3(Rotation::identity()), Vec3::Zero());
  EXPECT_LT((log_so3(exp_so3(Vec3(0.1, 0.2, 0.3))) - Vec3(0.1, 0.2, 0.3)).norm(), 1e-12);
  EXPECT_LT((log_so3(Rotation::from_matrix(rot_x_90())) - Vec3(pi / 2, 0, 0)).norm(), 1e-12);
}

TEST(LogSo3, RoundTrip) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = test::random_in_ball(rng, pi - 1e-5);
    const auto r = exp_so3(v);
    const auto l = log_so3_detailed(r);
    EXPECT_FALSE(l.near_pi);
    EXPECT_LT((exp_so3(l.v).matrix() - r.matrix()).norm(), 1e-9);
    EXPECT_LT((l.v - v).norm(), 1e-9);
  }
}

TEST(LogSo3, NearPiUsesEigenvectorBranch) {
  std::mt19937_64 rng(10);
  for (double gap : {0.0, 1e-9, 5e-7}) {
    for (int i = 0; i < 20; ++i) {
      const Vec3 axis = test::random_vec3(rng, -1, 1).normalized();
      const auto r = exp_so3((pi - gap) * axis);
      const auto l = log_so3_detailed(r);
      EXPECT_TRUE(l.near_pi);
      EXPECT_NEAR(l.v.norm(), pi - gap, 1e-7);
      EXPECT_LT((exp_so3(l.v).matrix() - r.matrix()).norm(), 1e-9);
    }
  }
}

TEST(ManifoldDistance, Examples) {
  EXPECT_EQ(manifold_distance(Mat3::Identity()), 0.0);
  EXPECT_NEAR(manifold_distance(2.0 * Mat3::Identity()), std::sqrt(27.0), 1e-14);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  EXPECT_EQ(manifold_distance(reflect), 0.0);  // zero on all of O(3)
}

TEST(Rotation, FromMatrixValidates) {
  EXPECT_NO_THROW(Rotation::from_matrix(rot_x_90()));
  EXPECT_THROW(Rotation::from_matrix(2.0 * Mat3::Identity()), ValidationError);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  EXPECT_THROW(Rotation::from_matrix(reflect), ValidationError);
}

TEST(Embed, ColumnMajorIdentity) {
  Vec9 expected;
  expected << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_EQ(embed(Rotation::identity()), expected);
  Mat3 m;
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Vec9 cm;
  cm << 1, 4, 7, 2, 5, 8, 3, 6, 9;
  EXPECT_EQ(embed(m), cm);
}

TEST(Embed, InverseAndIsometry) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_rotation(rng);
    const auto b = random_rotation(rng);
    EXPECT_EQ(unembed(embed(a)).matrix(), a.matrix());
    EXPECT_NEAR((embed(a) - embed(b)).norm(), (a.matrix() - b.matrix()).norm(), 1e-14);
  }
}

TEST(RandomRotation, ValidAndDeterministic) {
  std::mt19937_64 a(12), b(12);
  for (int i = 0; i < 1000; ++i) {
    const auto r = random_rotation(a);
    EXPECT_LE(manifold_distance(r.matrix()), 1e-12);
    EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
    EXPECT_EQ(r.matrix(), random_rotation(b).matrix());
  }
}

TEST(RandomRotation, HaarTraceMeanIsZero) {
  std::mt19937_64 rng(13);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += random_rotation(rng).matrix().trace();
  EXPECT_NEAR(sum / n, 0.0, 0.02);
}

TEST(RandomRotation, AngleFollowsHaarDensity) {
  std::mt19937_64 rng(14);
  std::vector<double> angles;
  const int n = 100000;
  for (int i = 0; i < n; ++i) angles.push_back(rotation_angle(random_rotation(rng)));
  // density (1 - cos t)/pi on [0, pi]  =>  CDF (t - sin t)/pi
  const double d = test::ks_statistic(angles, [](double t) { return (t - std::sin(t)) / pi; });
  EXPECT_LT(d, 1.95 / std::sqrt(static_cast<double>(n)));  // alpha = 0.001
}

TEST(ProjectToSo3, RecoversPerturbedRotation) {
  std::mt19937_64 rng(15);
  const auto r = random_rotation(rng);
  const Mat3 noisy = r.matrix() + 1e-8 * Mat3::Random();
  const auto p = project_to_so3(noisy);
  EXPECT_LE(manifold_distance(p.matrix()), 1e-14);
  EXPECT_LT((p.matrix() - r.matrix()).norm(), 1e-7);
}

}  // namespace
}  // namespace lgobs
