#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace teleop {

inline constexpr int kJointCount = 6;

template <typename Scalar>
using JointVector = Eigen::Matrix<Scalar, kJointCount, 1>;

/// Six joint angles in radians.
using JointConfig = JointVector<double>;

template <typename Scalar>
struct PoseT {
  Eigen::Matrix<Scalar, 3, 1> position = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Quaternion<Scalar> orientation = Eigen::Quaternion<Scalar>::Identity();

  friend bool operator==(const PoseT& lhs, const PoseT& rhs) {
    return lhs.position == rhs.position && lhs.orientation.coeffs() == rhs.orientation.coeffs();
  }
};

using Pose = PoseT<double>;

// ---------------------------------------------------------------------------
// Enumerations carried on the wire. Each has to_string / parse helpers; the
// parse functions throw Error(Errc::protocol) on unknown text.

enum class Platform { web, vr, mobile };
enum class ObjectKind { scene_object, phantom_robot };
enum class LockAction { acquire, release };
enum class CommandOrigin { validate, trajectory };
enum class RobotEventKind { hello, accepted, busy, rejected, unreachable, progress, completed };
enum class SubscribeMode { unicast, multicast_group, publish, unsubscribe };
enum class SignalKind { load, unload, safe };
enum class ModuleStatus { ok, degraded, failed };
enum class Variant { classic, mobile };

std::string_view to_string(Platform v);
std::string_view to_string(ObjectKind v);
std::string_view to_string(LockAction v);
std::string_view to_string(CommandOrigin v);
std::string_view to_string(RobotEventKind v);
std::string_view to_string(SubscribeMode v);
std::string_view to_string(SignalKind v);
std::string_view to_string(ModuleStatus v);
std::string_view to_string(Variant v);

Platform parse_platform(std::string_view text);
ObjectKind parse_object_kind(std::string_view text);
LockAction parse_lock_action(std::string_view text);
CommandOrigin parse_command_origin(std::string_view text);
RobotEventKind parse_robot_event(std::string_view text);
SubscribeMode parse_subscribe_mode(std::string_view text);
SignalKind parse_signal_kind(std::string_view text);
ModuleStatus parse_module_status(std::string_view text);
Variant parse_variant(std::string_view text);

// ---------------------------------------------------------------------------
// Shared world state

struct ShareableObject {
  std::string object_id;
  ObjectKind kind = ObjectKind::scene_object;
  /// Pose for scene objects, joint configuration for phantom robots.
  std::variant<Pose, JointConfig> state;
  std::optional<std::string> owner;
  std::uint64_t world_seq = 0;

  bool operator==(const ShareableObject&) const = default;
};

struct UserEntry {
  std::string user_id;
  Platform platform = Platform::web;

  bool operator==(const UserEntry&) const = default;
};

struct WorldSnapshot {
  std::uint64_t world_seq = 0;
  std::vector<ShareableObject> objects;    // sorted by object_id
  std::vector<UserEntry> connected_users;  // sorted by user_id

  bool operator==(const WorldSnapshot&) const = default;

  const ShareableObject* find(std::string_view object_id) const;
};

inline std::string phantom_object_id(std::string_view user_id) { return "phantom:" + std::string(user_id); }

// ---------------------------------------------------------------------------
// Module lifecycle

struct CoreSignal {
  SignalKind kind = SignalKind::load;
  std::optional<int> degree;  // present iff kind == safe

  static CoreSignal load() { return {SignalKind::load, std::nullopt}; }
  static CoreSignal unload() { return {SignalKind::unload, std::nullopt}; }
  static CoreSignal safe(int degree) { return {SignalKind::safe, degree}; }

  bool operator==(const CoreSignal&) const = default;
};

/// "LOAD", "UNLOAD" or "SAFE <degree>".
std::string to_string(const CoreSignal& signal);

struct StateReport {
  std::string module;
  ModuleStatus status = ModuleStatus::ok;
  int active_units = 0;
  std::string detail;

  bool operator==(const StateReport&) const = default;
};

struct LatencySample {
  std::string source;
  double rtt_ms = 0.0;
  std::int64_t ts_ms = 0;
  bool timed_out = false;

  bool operator==(const LatencySample&) const = default;
};

// ---------------------------------------------------------------------------
// Streams

struct Frame {
  std::string source_id;
  std::uint64_t frame_seq = 0;
  std::int64_t ts_ms = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

}  // namespace teleop
