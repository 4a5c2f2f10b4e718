#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "teleop/types.hpp"

namespace teleop::session {

/// Persistence boundary for the shared world. Implementations must make
/// save() atomic: a reader sees either the previous or the new snapshot.
class WorldStore {
 public:
  virtual ~WorldStore() = default;
  virtual void save(const WorldSnapshot& snapshot) = 0;
  /// Empty when nothing was ever saved; throws Error(store) on corruption.
  virtual std::optional<WorldSnapshot> load() = 0;
};

class FileWorldStore final : public WorldStore {
 public:
  explicit FileWorldStore(std::filesystem::path path) : path_(std::move(path)) {}
  void save(const WorldSnapshot& snapshot) override;
  std::optional<WorldSnapshot> load() override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class MemoryWorldStore final : public WorldStore {
 public:
  void save(const WorldSnapshot& snapshot) override;
  std::optional<WorldSnapshot> load() override;

 private:
  std::mutex mutex_;
  std::optional<WorldSnapshot> stored_;
};

/// Canonical text of a snapshot (the store file body); equal snapshots give
/// byte-identical output.
std::string canonical_text(const WorldSnapshot& snapshot);

/// Loads the persisted world, or `initial_scene` when the store is empty.
WorldSnapshot restore_world(WorldStore& store, const WorldSnapshot& initial_scene);

}  // namespace teleop::session
