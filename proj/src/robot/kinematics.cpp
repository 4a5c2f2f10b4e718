#include "teleop/robot/kinematics.hpp"

#include <random>

namespace teleop::robot {

DhTable<double> default_dh_table() {
  constexpr double deg = M_PI / 180.0;
  DhTable<double> dh;
  dh.a << 0.0, 0.30, 0.075, 0.0, 0.0, 0.0;
  dh.d << 0.33, 0.0, 0.0, 0.32, 0.0, 0.08;
  dh.alpha << -90.0 * deg, 0.0, -90.0 * deg, 90.0 * deg, -90.0 * deg, 0.0;
  return dh;
}

void JointLimits::require(const JointConfig& q) const {
  if (auto bad = first_violation(q)) {
    throw Error(Errc::limit, "joint " + std::to_string(*bad + 1) + " value " + std::to_string(q(*bad)) + " outside [" +
                                 std::to_string(lower(*bad)) + ", " + std::to_string(upper(*bad)) + "]");
  }
}

PoseResidual pose_residual(const Pose& target, const Pose& actual) {
  PoseResidual r;
  r.position = (target.position - actual.position).norm();
  r.orientation = target.orientation.angularDistance(actual.orientation);
  return r;
}

namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;

Vector6 task_error(const Pose& target, const Isometry3<double>& current) {
  Vector6 e;
  e.head<3>() = target.position - current.translation();
  const Eigen::Matrix3d delta = target.orientation.toRotationMatrix() * current.rotation().transpose();
  const Eigen::AngleAxisd aa(delta);
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  return a;
}

struct Attempt {
  JointConfig q;
  PoseResidual residual;
  int iterations = 0;
};

bool within(const PoseResidual& r, double pos_tol, double ori_tol) {
  return r.position < pos_tol && r.orientation < ori_tol;
}

double score(const PoseResidual& r) { return r.position + r.orientation; }

Attempt solve_from(const DhTable<double>& dh, const JointLimits& limits, const Pose& target, JointConfig q,
                   const IkOptions& options) {
  // Iterate well past the acceptance bounds; a solve that converges at all
  // normally reaches round-off within a few more steps.
  constexpr double kConverged = 1e-12;
  // Levenberg-Marquardt style: a step that does not reduce the task error
  // is discarded and the damping raised; accepted steps lower it again.
  double lambda = options.damping;
  Vector6 e = task_error(target, tool_transform(dh, q));
  Attempt best{q, pose_residual(target, forward_kinematics(dh, q)), 0};
  for (int it = 1; it <= options.max_iterations; ++it) {
    if (e.head<3>().norm() < kConverged && e.tail<3>().norm() < kConverged) break;
    const Eigen::Matrix<double, 6, kJointCount> jac = geometric_jacobian(dh, q);
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda * lambda * Eigen::Matrix<double, 6, 6>::Identity();
    JointConfig dq = jac.transpose() * jjt.ldlt().solve(e);
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > options.step_clamp) dq *= options.step_clamp / largest;
    JointConfig next = q + dq;
    for (int i = 0; i < kJointCount; ++i) {
      next(i) = std::clamp(wrap_angle(next(i)), limits.lower(i), limits.upper(i));
    }
    const Vector6 e_next = task_error(target, tool_transform(dh, next));
    if (e_next.norm() < e.norm()) {
      q = next;
      e = e_next;
      lambda = std::max(lambda * 0.5, 1e-9);
      const PoseResidual r = pose_residual(target, forward_kinematics(dh, q));
      if (score(r) < score(best.residual)) best = {q, r, it};
    } else {
      lambda = std::min(lambda * 4.0, 1e3);
    }
  }
  return best;
}

}  // namespace

IkSolution inverse_kinematics(const DhTable<double>& dh, const JointLimits& limits, const Pose& target,
                              const JointConfig& seed, const IkOptions& options) {
  if (std::abs(target.orientation.norm() - 1.0) > 1e-9) {
    throw Error(Errc::validation, "target orientation is not a unit quaternion");
  }
  JointConfig start = seed;
  for (int i = 0; i < kJointCount; ++i) start(i) = std::clamp(start(i), limits.lower(i), limits.upper(i));

  std::mt19937_64 rng(0x5eed);
  Attempt best = solve_from(dh, limits, target, start, options);
  int spent = best.iterations;
  for (int attempt = 0;
       attempt < options.restarts && !within(best.residual, options.position_tolerance, options.orientation_tolerance);
       ++attempt) {
    JointConfig q;
    for (int i = 0; i < kJointCount; ++i) {
      q(i) = std::uniform_real_distribution<double>(limits.lower(i), limits.upper(i))(rng);
    }
    Attempt a = solve_from(dh, limits, target, q, options);
    spent += options.max_iterations;
    if (score(a.residual) < score(best.residual)) best = a;
  }
  if (!within(best.residual, options.position_tolerance, options.orientation_tolerance)) {
    throw UnreachableError("no IK convergence (best residual " + std::to_string(best.residual.position) + " m, " +
                               std::to_string(best.residual.orientation) + " rad)",
                           best.residual);
  }
  return {best.q, best.residual, spent};
}

}  // namespace teleop::robot
