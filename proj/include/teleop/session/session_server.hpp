#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "teleop/clock.hpp"
#include "teleop/robot/kinematics.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/session/world_store.hpp"
#include "teleop/wire/messages.hpp"

namespace teleop::session {

/// Path from the session server to the robot server. submit() throws
/// Error(delivery) when the robot cannot be reached.
class RobotLink {
 public:
  virtual ~RobotLink() = default;
  virtual robot::CommandReceipt submit(CommandOrigin origin, const std::string& user_id,
                                       std::vector<JointConfig> waypoints) = 0;
  virtual JointConfig current_configuration() = 0;
};

/// In-process link; `set_reachable(false)` simulates a network partition.
class LocalRobotLink final : public RobotLink {
 public:
  explicit LocalRobotLink(robot::RobotServer& server) : server_(server) {}
  robot::CommandReceipt submit(CommandOrigin origin, const std::string& user_id,
                               std::vector<JointConfig> waypoints) override;
  JointConfig current_configuration() override;
  void set_reachable(bool reachable) { reachable_ = reachable; }

 private:
  robot::RobotServer& server_;
  std::atomic<bool> reachable_{true};
};

/// Receives every envelope addressed to one session, already stamped with
/// that connection's sequence number. Called with the server lock held, so
/// it must not call back into the server.
using Outbox = std::function<void(const wire::Envelope&)>;

struct SessionConfig {
  std::string server_id = "server";
  robot::JointLimits limits;
  JointConfig default_phantom = JointConfig::Zero();  // used when no robot is linked
};

struct JoinResult {
  std::string session_id;
  WorldSnapshot snapshot;
};

struct LockResult {
  bool granted = false;
  std::string owner;            // holder after the request
  std::uint64_t world_seq = 0;  // zero on deny
};

struct ValidationRecord {
  std::string user_id;
  CommandOrigin origin = CommandOrigin::validate;
  robot::CommandReceipt receipt;
};

/// The multi-user server. Every mutation, and the broadcast it causes, runs
/// under one lock, so world_seq order is the order every client observes.
class SessionServer {
 public:
  SessionServer(WorldSnapshot initial, const Clock& clock, SessionConfig config = {});

  void set_robot_link(std::shared_ptr<RobotLink> link);

  /// Sends the joiner a full SNAPSHOT and everyone else a JOIN notice
  /// followed by the new phantom. Throws Error(duplicate) for a connected id.
  JoinResult join_session(const std::string& user_id, Platform platform, Outbox outbox);

  std::uint64_t update_phantom(const std::string& session_id, const JointConfig& q);
  LockResult acquire_lock(const std::string& session_id, const std::string& object_id);
  std::uint64_t release_lock(const std::string& session_id, const std::string& object_id);

  /// Commits the caller's phantom as one ROBOT_CMD. BUSY and REJECTED come
  /// back as receipts; an unreachable robot throws Error(delivery).
  robot::CommandReceipt validate_phantom(const std::string& session_id);
  robot::CommandReceipt request_trajectory(const std::string& session_id, std::vector<JointConfig> waypoints);

  /// Releases the session's locks and removes its phantom in one mutation.
  void disconnect(const std::string& session_id);

  /// Dispatches a client envelope. Domain failures are answered with an
  /// ERROR envelope; protocol violations (bad seq, unexpected type) throw
  /// Error(protocol) and should end the connection.
  void handle(const std::string& session_id, const wire::Envelope& msg);

  /// Forwards robot completion/progress notices to every client.
  void on_robot_event(const wire::RobotStateBody& event);

  WorldSnapshot snapshot() const;
  void persist_world(WorldStore& store) const;
  std::vector<ValidationRecord> validation_log() const;
  std::size_t session_count() const;
  std::string user_of(const std::string& session_id) const;

 private:
  struct Session {
    std::string user_id;
    Platform platform = Platform::web;
    Outbox outbox;
    std::uint64_t out_seq = 0;
    std::uint64_t last_in_seq = 0;
    bool seen_input = false;
  };

  Session& session_locked(const std::string& session_id);
  ShareableObject& object_locked(const std::string& object_id);
  void send_locked(Session& session, wire::Body body);
  void broadcast_locked(const wire::Body& body, const Session* except = nullptr);
  WorldSnapshot snapshot_locked() const;
  std::vector<UserEntry> users_locked() const;
  robot::CommandReceipt forward_locked(Session& session, CommandOrigin origin, std::vector<JointConfig> waypoints);
  void send_error_locked(Session& session, const Error& error);

  const Clock& clock_;
  const SessionConfig config_;
  mutable std::mutex mutex_;
  std::uint64_t world_seq_ = 0;
  std::map<std::string, ShareableObject> objects_;
  std::map<std::string, Session> sessions_;  // by session id
  std::map<std::string, std::string> session_by_user_;
  std::uint64_t next_session_ = 1;
  std::shared_ptr<RobotLink> robot_;
  std::vector<ValidationRecord> validations_;
};

/// Starts a server from persisted state: scene objects and world_seq are
/// kept, phantoms, locks and users of the previous run are dropped since
/// none of those sessions exist any more.
WorldSnapshot startup_world(const WorldSnapshot& restored);

}  // namespace teleop::session
