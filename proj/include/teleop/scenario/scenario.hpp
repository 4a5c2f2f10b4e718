#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "teleop/net/framed_connection.hpp"
#include "teleop/proto/app_spec.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/scenario/local_stack.hpp"
#include "teleop/session/session_server.hpp"

namespace teleop::scenario {

enum class ActionKind { join, phantom, jog, lock, release, validate, trajectory, disconnect };

struct Action {
  std::int64_t t_ms = 0;
  ActionKind kind = ActionKind::join;
  std::string object;                   // lock, release
  JointConfig q = JointConfig::Zero();  // phantom
  std::vector<JointConfig> waypoints;   // trajectory
  int count = 1;                        // jog
  double rate_hz = 100.0;               // jog
  int joint = 0;                        // jog: 1..6, 0 picks at random
  double step_rad = 0.0;                // jog
  int line = 0;
};

struct ClientScript {
  std::string user_id;
  Platform platform = Platform::web;
  std::vector<Action> actions;
};

enum class CoreActionKind { hot_add, unload, safe };

struct CoreAction {
  std::int64_t t_ms = 0;
  CoreActionKind kind = CoreActionKind::hot_add;
  std::string module;
  Variant variant = Variant::classic;
  std::optional<int> units;
  int degree = 0;
  int line = 0;
};

struct Assertion {
  std::string name;
  std::map<std::string, std::string> args;
  int line = 0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::int64_t until_ms = 1000;
  StackConfig stack;
  proto::AppSpec app;
  std::vector<ClientScript> clients;
  std::vector<CoreAction> core_actions;
  std::vector<Assertion> assertions;
};

/// Names accepted in <assert name=...>.
const std::vector<std::string>& assertion_names();

/// Parses a <scenario> document; relative paths resolve against base_dir.
/// Unknown actions, unknown assertions, duplicate users and references to
/// objects missing from the scene throw Error(validation).
Scenario parse_scenario(std::string_view xml_text, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

/// Default application: the camera module sized to the stack plus teleop.
proto::AppSpec default_app(int cameras);

struct AssertionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<AssertionResult> results;
  std::vector<std::string> signals;  // e.g. "t=6000 camera SAFE 4"
  std::size_t robot_commands = 0;
  bool passed() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  /// Set to drive a running session server over TCP instead of the
  /// in-process stack. Assertions that need the stack internals then fail.
  std::optional<net::Endpoint> server;
};

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// One JSON record per assertion.
std::string report_jsonl(const ScenarioReport& report);

/// Robot command log against ACCEPTED receipts: one-to-one by command id
/// with matching origin and user, and no motion outside a command.
/// Returns a description of the first mismatch.
std::optional<std::string> check_provenance(const std::vector<robot::CommandRecord>& executed,
                                            const std::vector<session::ValidationRecord>& receipts,
                                            std::size_t unexplained_motion);

}  // namespace teleop::scenario
