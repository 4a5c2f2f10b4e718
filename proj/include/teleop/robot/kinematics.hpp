#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <optional>

#include "teleop/error.hpp"
#include "teleop/types.hpp"

namespace teleop::robot {

/// Standard Denavit-Hartenberg parameters of a 6R arm. Joint i contributes
/// Rz(theta_i) * Tz(d_i) * Tx(a_i) * Rx(alpha_i) with theta_i = q_i.
template <typename Scalar>
struct DhTable {
  JointVector<Scalar> a = JointVector<Scalar>::Zero();
  JointVector<Scalar> d = JointVector<Scalar>::Zero();
  JointVector<Scalar> alpha = JointVector<Scalar>::Zero();

  template <typename NewScalar>
  DhTable<NewScalar> cast() const {
    return {a.template cast<NewScalar>(), d.template cast<NewScalar>(), alpha.template cast<NewScalar>()};
  }
};

/// Desk-scale 6R table used when no robot file is given.
DhTable<double> default_dh_table();

template <typename Scalar>
using Isometry3 = Eigen::Transform<Scalar, 3, Eigen::Isometry>;

template <typename Scalar>
Isometry3<Scalar> dh_link(Scalar a, Scalar d, Scalar alpha, Scalar theta) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  Isometry3<Scalar> t = Isometry3<Scalar>::Identity();
  t.rotate(Eigen::AngleAxis<Scalar>(theta, Vec3::UnitZ()));
  t.translate(Vec3(a, Scalar(0), d));  // Tz(d) * Tx(a)
  t.rotate(Eigen::AngleAxis<Scalar>(alpha, Vec3::UnitX()));
  return t;
}

/// Base-to-tool transform.
template <typename Scalar, typename Derived>
Isometry3<Scalar> tool_transform(const DhTable<Scalar>& dh, const Eigen::MatrixBase<Derived>& q) {
  static_assert(Derived::SizeAtCompileTime == kJointCount, "expects six joint angles");
  Isometry3<Scalar> t = Isometry3<Scalar>::Identity();
  for (int i = 0; i < kJointCount; ++i) t = t * dh_link<Scalar>(dh.a(i), dh.d(i), dh.alpha(i), q(i));
  return t;
}

template <typename Scalar, typename Derived>
PoseT<Scalar> forward_kinematics(const DhTable<Scalar>& dh, const Eigen::MatrixBase<Derived>& q) {
  const Isometry3<Scalar> t = tool_transform(dh, q);
  PoseT<Scalar> pose;
  pose.position = t.translation();
  pose.orientation = Eigen::Quaternion<Scalar>(t.rotation()).normalized();
  if (pose.orientation.w() < Scalar(0)) pose.orientation.coeffs() *= Scalar(-1);
  return pose;
}

/// Geometric Jacobian in the base frame; rows 0-2 linear, 3-5 angular.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, 6, kJointCount> geometric_jacobian(const DhTable<Scalar>& dh,
                                                         const Eigen::MatrixBase<Derived>& q) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  std::array<Isometry3<Scalar>, kJointCount + 1> frames;
  frames[0] = Isometry3<Scalar>::Identity();
  for (int i = 0; i < kJointCount; ++i) {
    frames[i + 1] = frames[i] * dh_link<Scalar>(dh.a(i), dh.d(i), dh.alpha(i), q(i));
  }
  const Vec3 tip = frames[kJointCount].translation();
  Eigen::Matrix<Scalar, 6, kJointCount> jac;
  for (int i = 0; i < kJointCount; ++i) {
    const Vec3 axis = frames[i].linear().col(2);
    jac.template block<3, 1>(0, i) = axis.cross(tip - frames[i].translation());
    jac.template block<3, 1>(3, i) = axis;
  }
  return jac;
}

struct JointLimits {
  JointConfig lower = JointConfig::Constant(-170.0 * M_PI / 180.0);
  JointConfig upper = JointConfig::Constant(170.0 * M_PI / 180.0);

  bool contains(const JointConfig& q) const { return !first_violation(q).has_value(); }

  /// Index of the first joint outside its interval (non-finite counts).
  std::optional<int> first_violation(const JointConfig& q) const {
    for (int i = 0; i < kJointCount; ++i) {
      if (!std::isfinite(q(i)) || q(i) < lower(i) || q(i) > upper(i)) return i;
    }
    return std::nullopt;
  }

  /// Throws Error(limit) naming the offending joint (1-based in the message).
  void require(const JointConfig& q) const;
};

struct PoseResidual {
  double position = 0.0;     // metres
  double orientation = 0.0;  // radians
};

PoseResidual pose_residual(const Pose& target, const Pose& actual);

struct IkOptions {
  double damping = 0.01;
  int max_iterations = 200;
  double step_clamp = 0.2;  // rad, per joint per iteration
  double position_tolerance = 1e-6;
  double orientation_tolerance = 1e-6;
  /// Extra attempts from deterministic pseudo-random seeds after the
  /// caller's seed fails; each gets the full iteration budget.
  int restarts = 64;
};

struct IkSolution {
  JointConfig q = JointConfig::Zero();
  PoseResidual residual;
  int iterations = 0;
};

class UnreachableError : public Error {
 public:
  UnreachableError(const std::string& message, PoseResidual best) : Error(Errc::unreachable, message), best_(best) {}
  PoseResidual best_residual() const { return best_; }

 private:
  PoseResidual best_;
};

/// Damped least squares from `seed`. The returned residual is recomputed by
/// forward kinematics. Throws UnreachableError when no attempt converges.
IkSolution inverse_kinematics(const DhTable<double>& dh, const JointLimits& limits, const Pose& target,
                              const JointConfig& seed, const IkOptions& options = {});

}  // namespace teleop::robot
