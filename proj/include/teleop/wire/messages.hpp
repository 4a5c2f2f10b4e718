#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "teleop/types.hpp"

namespace teleop::wire {

inline constexpr int kProtocolVersion = 1;

/// Order matches the alternatives of `Body`.
enum class MsgType {
  join,
  snapshot,
  phantom_update,
  lock_req,
  lock_grant,
  lock_deny,
  validate,
  robot_cmd,
  robot_state,
  frame,
  subscribe,
  ping,
  pong,
  module_signal,
  state_report,
  error,
};

std::string_view to_string(MsgType type);
MsgType parse_msg_type(std::string_view text);

/// Client request to join, and the notice broadcast to other users.
struct JoinBody {
  std::string user_id;
  Platform platform = Platform::web;
  bool operator==(const JoinBody&) const = default;
};

/// Full world state (join reply) or a delta: `snapshot.objects` holds the
/// changed objects, `removed` the deleted ids, `connected_users` is always
/// the complete list.
struct SnapshotBody {
  bool full = true;
  WorldSnapshot snapshot;
  std::vector<std::string> removed;
  bool operator==(const SnapshotBody&) const = default;
};

struct PhantomUpdateBody {
  std::string object_id;
  JointConfig q = JointConfig::Zero();
  std::uint64_t world_seq = 0;  // zero on client requests
  bool operator==(const PhantomUpdateBody&) const = default;
};

struct LockReqBody {
  std::string object_id;
  LockAction action = LockAction::acquire;
  bool operator==(const LockReqBody&) const = default;
};

struct LockGrantBody {
  std::string object_id;
  std::string owner;
  std::uint64_t world_seq = 0;
  bool operator==(const LockGrantBody&) const = default;
};

struct LockDenyBody {
  std::string object_id;
  std::string owner;  // current holder
  bool operator==(const LockDenyBody&) const = default;
};

struct ValidateBody {
  bool operator==(const ValidateBody&) const = default;
};

struct RobotCmdBody {
  std::uint64_t command_id = 0;
  CommandOrigin origin = CommandOrigin::validate;
  std::string user_id;
  std::vector<JointConfig> waypoints;
  bool operator==(const RobotCmdBody&) const = default;
};

/// Robot server receipts, completion notices and periodic state.
struct RobotStateBody {
  std::uint64_t command_id = 0;
  RobotEventKind event = RobotEventKind::progress;
  JointConfig q = JointConfig::Zero();
  std::string detail;
  bool operator==(const RobotStateBody&) const = default;
};

using FrameBody = Frame;

struct SubscribeBody {
  std::string source_id;
  SubscribeMode mode = SubscribeMode::unicast;
  std::string group_id;       // empty unless MULTICAST_GROUP
  double nominal_rate = 0.0;  // frames/s, PUBLISH only
  bool operator==(const SubscribeBody&) const = default;
};

struct PingBody {
  bool operator==(const PingBody&) const = default;
};

struct PongBody {
  std::uint64_t ping_seq = 0;
  bool operator==(const PongBody&) const = default;
};

struct ModuleSignalBody {
  std::string module;
  CoreSignal signal;
  bool operator==(const ModuleSignalBody&) const = default;
};

using StateReportBody = StateReport;

struct ErrorBody {
  std::string code;
  std::string message;
  bool operator==(const ErrorBody&) const = default;
};

using Body = std::variant<JoinBody, SnapshotBody, PhantomUpdateBody, LockReqBody, LockGrantBody, LockDenyBody,
                          ValidateBody, RobotCmdBody, RobotStateBody, FrameBody, SubscribeBody, PingBody, PongBody,
                          ModuleSignalBody, StateReportBody, ErrorBody>;

static_assert(std::variant_size_v<Body> == static_cast<std::size_t>(MsgType::error) + 1);

struct Envelope {
  int version = kProtocolVersion;
  std::uint64_t seq = 0;
  MsgType msg_type = MsgType::ping;
  std::string sender;
  std::int64_t ts_ms = 0;
  Body body = PingBody{};

  bool operator==(const Envelope&) const = default;

  template <typename T>
  const T& as() const {
    return std::get<T>(body);
  }
};

inline MsgType type_of(const Body& body) { return static_cast<MsgType>(body.index()); }

inline Envelope make_envelope(std::string sender, std::uint64_t seq, std::int64_t ts_ms, Body body) {
  Envelope env;
  env.seq = seq;
  env.msg_type = type_of(body);
  env.sender = std::move(sender);
  env.ts_ms = ts_ms;
  env.body = std::move(body);
  return env;
}

}  // namespace teleop::wire
