#include "teleop/robot/robot_server.hpp"

#include <algorithm>

namespace teleop::robot {

RobotServer::RobotServer(RobotConfig config, const Clock& clock)
    : config_(config), clock_(clock), sim_(std::move(config)) {}

CommandReceipt RobotServer::submit(CommandOrigin origin, const std::string& user_id,
                                   std::vector<JointConfig> waypoints) {
  std::lock_guard lock(mutex_);
  if (origin == CommandOrigin::trajectory && !trajectory_support_) {
    return {0, RobotEventKind::rejected, "trajectory module not loaded"};
  }
  if (!sim_.idle()) {
    return {sim_.state().executing->command_id, RobotEventKind::busy, "robot busy"};
  }
  const std::uint64_t id = next_command_id_;
  try {
    sim_.execute_trajectory(id, waypoints);
  } catch (const Error& e) {
    return {0, RobotEventKind::rejected, e.what()};
  }
  ++next_command_id_;
  log_.push_back({id, origin, user_id, std::move(waypoints), clock_.now_ms(), false});
  // A zero-displacement command is already complete; its notice goes out
  // with the next tick so listeners never run inside a caller's submit().
  collect_notices();
  return {id, RobotEventKind::accepted, {}};
}

RobotState RobotServer::tick(double dt) {
  std::vector<wire::RobotStateBody> events;
  RobotState snapshot;
  {
    std::lock_guard lock(mutex_);
    const bool executing = !sim_.idle();
    const JointConfig before = sim_.state().q;
    sim_.step(dt);
    if (!executing && sim_.state().q != before) ++unexplained_motion_;
    collect_notices();
    events.swap(pending_events_);
    snapshot = sim_.state();
  }
  dispatch(events);
  return snapshot;
}

void RobotServer::collect_notices() {
  for (const auto& n : sim_.take_notices()) {
    auto it =
        std::find_if(log_.begin(), log_.end(), [&](const CommandRecord& r) { return r.command_id == n.command_id; });
    if (it != log_.end()) it->completed = true;
    pending_events_.push_back({n.command_id, n.kind, n.q, {}});
  }
}

RobotState RobotServer::state() const {
  std::lock_guard lock(mutex_);
  return sim_.state();
}

std::vector<CommandRecord> RobotServer::command_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t RobotServer::unexplained_motion() const {
  std::lock_guard lock(mutex_);
  return unexplained_motion_;
}

void RobotServer::set_trajectory_support(bool enabled) {
  std::lock_guard lock(mutex_);
  trajectory_support_ = enabled;
}

bool RobotServer::trajectory_support() const {
  std::lock_guard lock(mutex_);
  return trajectory_support_;
}

void RobotServer::add_listener(Listener listener) {
  std::lock_guard lock(listeners_mutex_);
  listeners_.push_back(std::move(listener));
}

void RobotServer::dispatch(const std::vector<wire::RobotStateBody>& events) {
  if (events.empty()) return;
  std::vector<Listener> listeners;
  {
    std::lock_guard lock(listeners_mutex_);
    listeners = listeners_;
  }
  for (const auto& e : events) {
    for (const auto& l : listeners) l(e);
  }
}

}  // namespace teleop::robot
