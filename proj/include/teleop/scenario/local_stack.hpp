#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "teleop/clock.hpp"
#include "teleop/relay/relay.hpp"
#include "teleop/robot/config.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/runtime/core.hpp"
#include "teleop/scenario/latency_shim.hpp"
#include "teleop/scenario/scripted_client.hpp"
#include "teleop/session/session_server.hpp"

namespace teleop::scenario {

struct StackConfig {
  robot::RobotConfig robot;
  WorldSnapshot scene;  // initial world; empty means the default scene
  int cameras = 5;
  double camera_rate_hz = 10.0;
  std::size_t frame_bytes = 256;
  std::int64_t tick_ms = 10;
  std::int64_t probe_ms = 100;
  runtime::ControllerConfig controller;
  relay::RelayConfig relay;
  LatencyProfile latency;
  std::string view_client = "view";
  bool wire_roundtrip = true;
};

/// The whole system in one process on virtual time. One tick: camera
/// sources publish, the view client's relay traffic passes the delay line,
/// PINGs are answered, samples reach the core, the core runs its control
/// period when due, and the robot advances. Everything is deterministic.
class LocalStack {
 public:
  explicit LocalStack(StackConfig config);
  ~LocalStack();

  const StackConfig& config() const { return config_; }
  ManualClock& clock() { return clock_; }
  std::int64_t now_ms() const { return clock_.now_ms(); }
  robot::RobotServer& robot() { return *robot_; }
  session::SessionServer& server() { return *server_; }
  session::LocalRobotLink& robot_link() { return *link_; }
  relay::Relay& relay() { return *relay_; }
  runtime::Core& core() { return *core_; }

  /// Runs one tick at the current time, then advances the clock.
  void tick();
  void run_until(std::int64_t t_ms);

  ScriptedClient& add_client(const std::string& user_id, Platform platform);
  ScriptedClient& client(const std::string& user_id);
  LocalTransport& transport(const std::string& user_id);
  std::vector<std::string> client_ids() const;

  std::vector<std::string> camera_sources() const;
  /// Frames that reached the view client, per source.
  const std::map<std::string, std::vector<std::uint64_t>>& view_frames() const { return view_frames_; }
  const std::vector<LatencySample>& samples() const { return samples_; }
  /// (t_ms, L̂) after each sample.
  const std::vector<std::pair<std::int64_t, double>>& estimate_trace() const { return estimate_trace_; }

 private:
  void feed_sample(const LatencySample& s);

  StackConfig config_;
  ManualClock clock_;
  std::unique_ptr<robot::RobotServer> robot_;
  std::shared_ptr<session::LocalRobotLink> link_;
  std::unique_ptr<session::SessionServer> server_;
  std::unique_ptr<relay::Relay> relay_;
  std::unique_ptr<runtime::Core> core_;
  DelayLine<wire::Envelope> downstream_;
  std::vector<std::string> sources_;
  std::vector<std::uint64_t> next_frame_seq_;
  std::map<std::string, std::unique_ptr<ScriptedClient>> clients_;
  std::map<std::string, std::unique_ptr<LocalTransport>> transports_;
  std::map<std::string, std::vector<std::uint64_t>> view_frames_;
  std::vector<LatencySample> samples_;
  std::vector<std::pair<std::int64_t, double>> estimate_trace_;
};

}  // namespace teleop::scenario
