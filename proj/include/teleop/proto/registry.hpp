#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "teleop/proto/descriptor.hpp"

namespace teleop::proto {

/// Module registry keyed by descriptor name. Registering a name that is
/// already present replaces the earlier descriptor. With a path, every
/// change is written through to a record file and the constructor reloads
/// it; without one the registry lives in memory only.
class ModuleRegistry {
 public:
  ModuleRegistry() = default;
  explicit ModuleRegistry(std::filesystem::path path);

  void register_module(const ModuleDescriptor& descriptor);
  /// Sorted by name.
  std::vector<ModuleDescriptor> list_modules() const;
  std::optional<ModuleDescriptor> find(const std::string& name) const;

 private:
  void persist() const;

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::vector<ModuleDescriptor> modules_;
};

}  // namespace teleop::proto
