#pragma once

#include <functional>
#include <string>
#include <vector>

#include "teleop/relay/relay.hpp"
#include "teleop/runtime/core.hpp"

namespace teleop::runtime {

/// Camera views: one relay subscription per active unit. SAFE k keeps the
/// first k sources and tears the rest down before reporting.
class CameraModule final : public Module {
 public:
  CameraModule(std::string name, relay::Relay& relay, std::string client_id, std::vector<std::string> sources,
               int requested_units);

  std::optional<StateReport> on_signal(const CoreSignal& signal) override;
  int active_units() const { return active_; }

 private:
  StateReport resize(int units);

  std::string name_;
  relay::Relay& relay_;
  std::string client_id_;
  std::vector<std::string> sources_;
  int requested_;
  int active_ = 0;
  bool connected_ = false;
};

/// Enables trajectory execution on the robot while loaded.
class TrajectoryModule final : public Module {
 public:
  TrajectoryModule(std::string name, std::function<void(bool)> set_support);
  std::optional<StateReport> on_signal(const CoreSignal& signal) override;

 private:
  std::string name_;
  std::function<void(bool)> set_support_;
};

/// Unit counter with no side effects. The behaviour switches exist for
/// fault-injection tests.
class GenericModule final : public Module {
 public:
  struct Behaviour {
    bool fail_load = false;
    bool silent_load = false;
    bool silent_safe = false;
  };

  GenericModule(std::string name, int requested_units, Behaviour behaviour);
  GenericModule(std::string name, int requested_units) : GenericModule(std::move(name), requested_units, Behaviour{}) {}
  std::optional<StateReport> on_signal(const CoreSignal& signal) override;

 private:
  std::string name_;
  int requested_;
  int active_ = 0;
  Behaviour behaviour_;
};

/// What the standard factory can wire modules to. Absent pieces make the
/// corresponding module a GenericModule.
struct ModuleEnvironment {
  relay::Relay* relay = nullptr;
  std::string camera_client = "core-view";
  std::vector<std::string> camera_sources;
  std::function<void(bool)> set_trajectory_support;
};

/// Descriptors of the modules this repository ships: camera (degradable,
/// five views), trajectory and teleop.
std::vector<proto::ModuleDescriptor> standard_descriptors();

/// "camera" and "trajectory" map to their modules, anything else to a
/// GenericModule.
ModuleFactory standard_factory(ModuleEnvironment env);

}  // namespace teleop::runtime
