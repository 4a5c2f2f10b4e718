#include "teleop/robot/robot_sim.hpp"

namespace teleop::robot {

RobotSim::RobotSim(RobotConfig config) : config_(std::move(config)) {
  config_.limits.require(config_.home);
  state_.q = config_.home;
  state_.tool_pose = forward_kinematics(config_.dh, state_.q);
}

bool RobotSim::arrived(const JointConfig& q, const JointConfig& target) {
  return (q - target).cwiseAbs().maxCoeff() <= kArrivalTolerance;
}

void RobotSim::execute_trajectory(std::uint64_t command_id, std::vector<JointConfig> waypoints) {
  if (state_.executing) {
    throw Error(Errc::busy, "executing command " + std::to_string(state_.executing->command_id));
  }
  if (waypoints.empty()) throw Error(Errc::validation, "trajectory has no waypoints");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (auto bad = config_.limits.first_violation(waypoints[i])) {
      throw Error(Errc::limit,
                  "waypoint " + std::to_string(i) + " joint " + std::to_string(*bad + 1) + " outside limits");
    }
  }
  const std::size_t count = waypoints.size();
  remaining_.assign(waypoints.begin(), waypoints.end());
  while (!remaining_.empty() && arrived(state_.q, remaining_.front())) remaining_.pop_front();
  if (remaining_.empty()) {
    notices_.push_back({command_id, RobotEventKind::completed, state_.q});
    return;
  }
  state_.executing = ExecutingCommand{command_id, remaining_.front(), count - remaining_.size(), count};
  remaining_.pop_front();
}

void RobotSim::advance_waypoint() {
  auto& exec = *state_.executing;
  while (!remaining_.empty() && arrived(state_.q, remaining_.front())) {
    remaining_.pop_front();
    ++exec.waypoint_index;
  }
  if (remaining_.empty()) {
    notices_.push_back({exec.command_id, RobotEventKind::completed, state_.q});
    state_.executing.reset();
    return;
  }
  exec.target = remaining_.front();
  ++exec.waypoint_index;
  remaining_.pop_front();
}

const RobotState& RobotSim::step(double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw Error(Errc::range, "step dt must be in (0, 0.1] s");
  if (!state_.executing) return state_;

  const double max_move = config_.v_max * dt;
  const JointConfig& target = state_.executing->target;
  for (int i = 0; i < kJointCount; ++i) {
    const double delta = target(i) - state_.q(i);
    if (std::abs(delta) <= max_move) {
      state_.q(i) = target(i);
    } else {
      state_.q(i) += delta > 0.0 ? max_move : -max_move;
    }
  }
  state_.tool_pose = forward_kinematics(config_.dh, state_.q);
  if (arrived(state_.q, target)) advance_waypoint();
  return state_;
}

std::vector<RobotNotice> RobotSim::take_notices() {
  std::vector<RobotNotice> out;
  out.swap(notices_);
  return out;
}

}  // namespace teleop::robot
