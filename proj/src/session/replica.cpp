#include "teleop/session/replica.hpp"

#include <algorithm>

namespace teleop::session {

void WorldReplica::record(const std::string& object_id, std::uint64_t world_seq) {
  object_logs_[object_id].push_back(world_seq);
}

void WorldReplica::upsert(const ShareableObject& object) {
  auto& objects = snapshot_.objects;
  auto it = std::lower_bound(objects.begin(), objects.end(), object.object_id,
                             [](const ShareableObject& o, const std::string& id) { return o.object_id < id; });
  if (it != objects.end() && it->object_id == object.object_id) {
    *it = object;
  } else {
    objects.insert(it, object);
  }
  record(object.object_id, object.world_seq);
}

void WorldReplica::apply(const wire::Envelope& msg) {
  envelope_log_.push_back(msg.seq);
  switch (msg.msg_type) {
    case wire::MsgType::snapshot: {
      const auto& b = msg.as<wire::SnapshotBody>();
      if (b.full) {
        snapshot_ = b.snapshot;
        has_snapshot_ = true;
        join_world_seq_ = b.snapshot.world_seq;
        for (const auto& o : snapshot_.objects) record(o.object_id, o.world_seq);
        return;
      }
      for (const auto& o : b.snapshot.objects) upsert(o);
      for (const auto& id : b.removed) {
        std::erase_if(snapshot_.objects, [&](const ShareableObject& o) { return o.object_id == id; });
        record(id, b.snapshot.world_seq);
      }
      snapshot_.connected_users = b.snapshot.connected_users;
      snapshot_.world_seq = b.snapshot.world_seq;
      mutation_log_.push_back(b.snapshot.world_seq);
      return;
    }
    case wire::MsgType::join: {
      const auto& b = msg.as<wire::JoinBody>();
      auto& users = snapshot_.connected_users;
      auto it = std::lower_bound(users.begin(), users.end(), b.user_id,
                                 [](const UserEntry& u, const std::string& id) { return u.user_id < id; });
      if (it == users.end() || it->user_id != b.user_id) users.insert(it, UserEntry{b.user_id, b.platform});
      return;
    }
    case wire::MsgType::phantom_update: {
      const auto& b = msg.as<wire::PhantomUpdateBody>();
      const ShareableObject* existing = snapshot_.find(b.object_id);
      ShareableObject o;
      o.object_id = b.object_id;
      o.kind = ObjectKind::phantom_robot;
      o.state = b.q;
      if (existing) o.owner = existing->owner;
      o.world_seq = b.world_seq;
      upsert(o);
      snapshot_.world_seq = b.world_seq;
      mutation_log_.push_back(b.world_seq);
      return;
    }
    case wire::MsgType::lock_grant: {
      const auto& b = msg.as<wire::LockGrantBody>();
      if (const ShareableObject* existing = snapshot_.find(b.object_id)) {
        ShareableObject o = *existing;
        o.owner = b.owner;
        o.world_seq = b.world_seq;
        upsert(o);
      }
      snapshot_.world_seq = b.world_seq;
      mutation_log_.push_back(b.world_seq);
      return;
    }
    default:
      return;
  }
}

bool WorldReplica::per_object_ordered() const {
  for (const auto& [id, log] : object_logs_) {
    for (std::size_t i = 1; i < log.size(); ++i) {
      if (log[i] <= log[i - 1]) return false;
    }
  }
  return true;
}

bool WorldReplica::gap_free() const {
  for (std::size_t i = 1; i < envelope_log_.size(); ++i) {
    if (envelope_log_[i] != envelope_log_[i - 1] + 1) return false;
  }
  if (has_snapshot_ && !mutation_log_.empty() && mutation_log_.front() != join_world_seq_ + 1) return false;
  for (std::size_t i = 1; i < mutation_log_.size(); ++i) {
    if (mutation_log_[i] != mutation_log_[i - 1] + 1) return false;
  }
  if (!mutation_log_.empty() && snapshot_.world_seq < mutation_log_.back()) return false;
  return true;
}

}  // namespace teleop::session
