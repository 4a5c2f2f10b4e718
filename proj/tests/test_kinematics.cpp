#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "teleop/robot/kinematics.hpp"

using namespace teleop;
using namespace teleop::robot;

namespace {

std::array<double, 6> as_array(const JointConfig& q) {
  std::array<double, 6> a{};
  for (int i = 0; i < 6; ++i) a[i] = q(i);
  return a;
}

JointConfig random_q(std::mt19937& rng, double range = 170.0 * M_PI / 180.0) {
  std::uniform_real_distribution<double> u(-range, range);
  JointConfig q;
  for (int i = 0; i < 6; ++i) q(i) = u(rng);
  return q;
}

}  // namespace

TEST(Kinematics, ZeroConfigurationHandComputed) {
  // Chained by hand through the default table: x = 0.3 + 0.075, z = 0.33 - 0.32 - 0.08.
  const Pose p = forward_kinematics(default_dh_table(), JointConfig::Zero());
  EXPECT_NEAR(p.position.x(), 0.375, 1e-15);
  EXPECT_NEAR(p.position.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.position.z(), -0.07, 1e-15);
}

TEST(Kinematics, MatchesMatrixOracle) {
  std::mt19937 rng(5);
  const auto arm = oracle::default_arm();
  for (int n = 0; n < 1000; ++n) {
    const JointConfig q = random_q(rng);
    const Pose p = forward_kinematics(default_dh_table(), q);
    const oracle::Mat4 t = oracle::forward(arm, as_array(q));
    const Eigen::Matrix3d r = p.orientation.toRotationMatrix();
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(p.position(i), t[i][3], 1e-12);
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(r(i, j), t[i][j], 1e-12);
    }
    EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
    EXPECT_GE(p.orientation.w(), 0.0);
  }
}

TEST(Kinematics, FirstJointHalfTurnKeepsHeight) {
  std::mt19937 rng(6);
  for (int n = 0; n < 100; ++n) {
    JointConfig q = random_q(rng, 1.0);
    const double z0 = forward_kinematics(default_dh_table(), q).position.z();
    q(0) += M_PI;
    EXPECT_NEAR(forward_kinematics(default_dh_table(), q).position.z(), z0, 1e-12);
  }
}

TEST(Kinematics, JacobianMatchesFiniteDifference) {
  std::mt19937 rng(7);
  const auto dh = default_dh_table();
  for (int n = 0; n < 20; ++n) {
    const JointConfig q = random_q(rng);
    const auto jac = geometric_jacobian(dh, q);
    const double h = 1e-7;
    for (int i = 0; i < 6; ++i) {
      JointConfig qp = q, qm = q;
      qp(i) += h;
      qm(i) -= h;
      const Eigen::Vector3d dp = (forward_kinematics(dh, qp).position - forward_kinematics(dh, qm).position) / (2 * h);
      EXPECT_LT((dp - jac.block<3, 1>(0, i)).norm(), 1e-6);
    }
  }
}

TEST(Kinematics, FixedPointAtSeed) {
  std::mt19937 rng(8);
  const auto dh = default_dh_table();
  const JointConfig seed = random_q(rng, 2.0);
  const IkSolution s = inverse_kinematics(dh, JointLimits{}, forward_kinematics(dh, seed), seed);
  EXPECT_LT(s.residual.position, 1e-9);
  EXPECT_LT(s.residual.orientation, 1e-9);
  EXPECT_LT((s.q - seed).norm(), 1e-6);
}

TEST(Kinematics, ReachableTargetsSolve) {
  std::mt19937 rng(9);
  const auto dh = default_dh_table();
  const JointLimits limits;
  for (int n = 0; n < 100; ++n) {
    const Pose target = forward_kinematics(dh, random_q(rng));
    const IkSolution s = inverse_kinematics(dh, limits, target, JointConfig::Zero());
    EXPECT_LT(s.residual.position, 1e-6);
    EXPECT_LT(s.residual.orientation, 1e-6);
    EXPECT_TRUE(limits.contains(s.q));
    const PoseResidual check = pose_residual(target, forward_kinematics(dh, s.q));
    EXPECT_LT(check.position, 1e-6);
  }
}

TEST(Kinematics, FarTargetIsUnreachable) {
  Pose far;
  far.position = Eigen::Vector3d(10.0, 0.0, 0.0);
  IkOptions opts;
  opts.restarts = 2;
  try {
    inverse_kinematics(default_dh_table(), JointLimits{}, far, JointConfig::Zero(), opts);
    FAIL();
  } catch (const UnreachableError& e) {
    EXPECT_EQ(e.code(), Errc::unreachable);
    EXPECT_GT(e.best_residual().position, 9.0);
  }
}

TEST(Kinematics, LimitViolationNamesJoint) {
  JointConfig q = JointConfig::Zero();
  q(3) = 3.2;
  EXPECT_EQ(JointLimits{}.first_violation(q), 3);
  q(3) = std::nan("");
  EXPECT_EQ(JointLimits{}.first_violation(q), 3);
}
