#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "teleop/wire/messages.hpp"

namespace teleop::session {

/// Client-side mirror of the shared world, rebuilt purely from the server's
/// broadcasts. Also keeps the logs the consistency checks audit.
class WorldReplica {
 public:
  /// Applies one server envelope; messages that carry no world state are
  /// only logged.
  void apply(const wire::Envelope& msg);

  const WorldSnapshot& snapshot() const { return snapshot_; }
  bool has_snapshot() const { return has_snapshot_; }

  /// world_seq values observed per object, in arrival order.
  const std::map<std::string, std::vector<std::uint64_t>>& object_logs() const { return object_logs_; }
  /// world_seq of every mutation broadcast, in arrival order.
  const std::vector<std::uint64_t>& mutation_log() const { return mutation_log_; }
  /// Envelope seq numbers, in arrival order.
  const std::vector<std::uint64_t>& envelope_log() const { return envelope_log_; }

  /// Per-object logs strictly increasing.
  bool per_object_ordered() const;
  /// Envelope seq consecutive and mutation world_seq consecutive after join.
  bool gap_free() const;

 private:
  void upsert(const ShareableObject& object);
  void record(const std::string& object_id, std::uint64_t world_seq);

  WorldSnapshot snapshot_;
  bool has_snapshot_ = false;
  std::uint64_t join_world_seq_ = 0;
  std::map<std::string, std::vector<std::uint64_t>> object_logs_;
  std::vector<std::uint64_t> mutation_log_;
  std::vector<std::uint64_t> envelope_log_;
};

}  // namespace teleop::session
