#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "teleop/clock.hpp"
#include "teleop/robot/robot_sim.hpp"
#include "teleop/wire/messages.hpp"

namespace teleop::robot {

struct CommandReceipt {
  std::uint64_t command_id = 0;  // for BUSY, the command currently executing
  RobotEventKind status = RobotEventKind::accepted;
  std::string detail;

  bool operator==(const CommandReceipt&) const = default;
};

/// Entry of the executed-command log.
struct CommandRecord {
  std::uint64_t command_id = 0;
  CommandOrigin origin = CommandOrigin::validate;
  std::string user_id;
  std::vector<JointConfig> waypoints;
  std::int64_t accepted_ms = 0;
  bool completed = false;
};

/// The robot server: owns the simulated arm, assigns command ids and keeps
/// the audit log. Thread-safe; listeners run outside the internal lock.
class RobotServer {
 public:
  using Listener = std::function<void(const wire::RobotStateBody&)>;

  RobotServer(RobotConfig config, const Clock& clock);

  /// Never throws for domain failures: BUSY and REJECTED come back as
  /// receipts so callers can forward them.
  CommandReceipt submit(CommandOrigin origin, const std::string& user_id, std::vector<JointConfig> waypoints);

  RobotState tick(double dt);
  RobotState state() const;
  const RobotConfig& config() const { return config_; }

  std::vector<CommandRecord> command_log() const;
  /// Ticks in which the arm moved without an executing command. Stays zero
  /// unless the provenance invariant is broken.
  std::size_t unexplained_motion() const;

  /// Gate for trajectory commands; the trajectory module toggles it.
  void set_trajectory_support(bool enabled);
  bool trajectory_support() const;

  void add_listener(Listener listener);

 private:
  void dispatch(const std::vector<wire::RobotStateBody>& events);
  void collect_notices();  // requires mutex_

  const RobotConfig config_;
  const Clock& clock_;
  mutable std::mutex mutex_;
  RobotSim sim_;
  std::uint64_t next_command_id_ = 1;
  bool trajectory_support_ = false;
  std::vector<CommandRecord> log_;
  std::size_t unexplained_motion_ = 0;
  std::vector<wire::RobotStateBody> pending_events_;

  std::mutex listeners_mutex_;
  std::vector<Listener> listeners_;
};

}  // namespace teleop::robot
