#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "teleop/robot/config.hpp"

namespace teleop::robot {

struct ExecutingCommand {
  std::uint64_t command_id = 0;
  JointConfig target = JointConfig::Zero();
  std::size_t waypoint_index = 0;  // index of `target` in the trajectory
  std::size_t waypoint_count = 0;

  bool operator==(const ExecutingCommand&) const = default;
};

struct RobotState {
  JointConfig q = JointConfig::Zero();
  std::optional<ExecutingCommand> executing;
  Pose tool_pose;  // forward_kinematics(q)
};

struct RobotNotice {
  std::uint64_t command_id = 0;
  RobotEventKind kind = RobotEventKind::completed;
  JointConfig q = JointConfig::Zero();
};

/// Simulated arm. Joint motion happens only in step(), and only while a
/// trajectory is executing.
class RobotSim {
 public:
  static constexpr double kArrivalTolerance = 1e-6;  // rad

  explicit RobotSim(RobotConfig config = {});

  const RobotConfig& config() const { return config_; }
  const RobotState& state() const { return state_; }
  bool idle() const { return !state_.executing.has_value(); }

  /// Starts a trajectory. Throws Error(busy) while executing, Error(validation)
  /// for an empty list and Error(limit) for any out-of-range waypoint; nothing
  /// moves in either case. A trajectory whose waypoints all coincide with the
  /// current configuration completes at once.
  void execute_trajectory(std::uint64_t command_id, std::vector<JointConfig> waypoints);

  /// Advances every joint toward the current waypoint by at most v_max * dt.
  /// dt must lie in (0, 0.1].
  const RobotState& step(double dt);

  std::vector<RobotNotice> take_notices();

 private:
  void advance_waypoint();
  static bool arrived(const JointConfig& q, const JointConfig& target);

  RobotConfig config_;
  RobotState state_;
  std::deque<JointConfig> remaining_;
  std::vector<RobotNotice> notices_;
};

}  // namespace teleop::robot
