#include "teleop/runtime/modules.hpp"

#include <algorithm>

#include "teleop/error.hpp"

namespace teleop::runtime {

namespace {

StateReport make_report(const std::string& name, int active, int requested, std::string detail = {}) {
  return {name, active >= requested ? ModuleStatus::ok : ModuleStatus::degraded, active, std::move(detail)};
}

}  // namespace

CameraModule::CameraModule(std::string name, relay::Relay& relay, std::string client_id,
                           std::vector<std::string> sources, int requested_units)
    : name_(std::move(name)),
      relay_(relay),
      client_id_(std::move(client_id)),
      sources_(std::move(sources)),
      requested_(requested_units) {}

StateReport CameraModule::resize(int units) {
  units = std::clamp(units, 0, std::min<int>(requested_, static_cast<int>(sources_.size())));
  for (int i = units; i < active_; ++i) relay_.unsubscribe(client_id_, sources_[i]);
  for (int i = active_; i < units; ++i) relay_.subscribe(client_id_, sources_[i], SubscribeMode::unicast);
  active_ = units;
  return make_report(name_, active_, requested_);
}

std::optional<StateReport> CameraModule::on_signal(const CoreSignal& signal) {
  try {
    switch (signal.kind) {
      case SignalKind::load:
        if (static_cast<int>(sources_.size()) < requested_) {
          return StateReport{name_, ModuleStatus::failed, 0,
                             "only " + std::to_string(sources_.size()) + " camera sources available"};
        }
        relay_.attach_client(client_id_);
        connected_ = true;
        return resize(requested_);
      case SignalKind::safe:
        return resize(signal.degree.value_or(0));
      case SignalKind::unload:
        resize(0);
        if (connected_) relay_.disconnect_client(client_id_);
        connected_ = false;
        return StateReport{name_, ModuleStatus::ok, 0, "unloaded"};
    }
  } catch (const Error& e) {
    return StateReport{name_, ModuleStatus::failed, active_, e.what()};
  }
  return std::nullopt;
}

TrajectoryModule::TrajectoryModule(std::string name, std::function<void(bool)> set_support)
    : name_(std::move(name)), set_support_(std::move(set_support)) {}

std::optional<StateReport> TrajectoryModule::on_signal(const CoreSignal& signal) {
  switch (signal.kind) {
    case SignalKind::load:
      set_support_(true);
      return StateReport{name_, ModuleStatus::ok, 1, "trajectory execution enabled"};
    case SignalKind::unload:
      set_support_(false);
      return StateReport{name_, ModuleStatus::ok, 0, "trajectory execution disabled"};
    case SignalKind::safe:
      break;
  }
  return StateReport{name_, ModuleStatus::ok, 1, {}};
}

GenericModule::GenericModule(std::string name, int requested_units, Behaviour behaviour)
    : name_(std::move(name)), requested_(requested_units), behaviour_(behaviour) {}

std::optional<StateReport> GenericModule::on_signal(const CoreSignal& signal) {
  switch (signal.kind) {
    case SignalKind::load:
      if (behaviour_.silent_load) return std::nullopt;
      if (behaviour_.fail_load) return StateReport{name_, ModuleStatus::failed, 0, "load refused"};
      active_ = requested_;
      return make_report(name_, active_, requested_);
    case SignalKind::safe:
      if (behaviour_.silent_safe) return std::nullopt;
      active_ = std::min(signal.degree.value_or(0), requested_);
      return make_report(name_, active_, requested_);
    case SignalKind::unload:
      active_ = 0;
      return StateReport{name_, ModuleStatus::ok, 0, "unloaded"};
  }
  return std::nullopt;
}

std::vector<proto::ModuleDescriptor> standard_descriptors() {
  proto::ModuleDescriptor camera;
  camera.name = "camera";
  camera.version = "1.0";
  camera.variants = {Variant::classic, Variant::mobile};
  camera.methods = {{"select_view", {{"index", "int"}}}, {"set_rate", {{"fps", "float"}}}};
  camera.degradable = true;
  camera.unit_name = "camera";
  camera.max_units = 5;
  camera.default_units = 5;

  proto::ModuleDescriptor teleop;
  teleop.name = "teleop";
  teleop.version = "1.0";
  teleop.variants = {Variant::classic, Variant::mobile};
  teleop.methods = {
      {"jog", {{"joint", "int"}, {"delta", "float"}}}, {"lock", {{"object", "string"}}}, {"validate", {}}};

  proto::ModuleDescriptor trajectory;
  trajectory.name = "trajectory";
  trajectory.version = "1.0";
  trajectory.variants = {Variant::classic};
  trajectory.methods = {{"execute_trajectory", {{"waypoints", "joint_list"}}}};

  return {camera, teleop, trajectory};
}

ModuleFactory standard_factory(ModuleEnvironment env) {
  return [env](const proto::ModuleDescriptor& d, Variant, int requested) -> std::unique_ptr<Module> {
    if (d.name == "camera" && env.relay) {
      return std::make_unique<CameraModule>(d.name, *env.relay, env.camera_client, env.camera_sources, requested);
    }
    if (d.name == "trajectory" && env.set_trajectory_support) {
      return std::make_unique<TrajectoryModule>(d.name, env.set_trajectory_support);
    }
    return std::make_unique<GenericModule>(d.name, requested);
  };
}

}  // namespace teleop::runtime
