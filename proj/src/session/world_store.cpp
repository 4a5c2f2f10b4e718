#include "teleop/session/world_store.hpp"

#include "teleop/error.hpp"
#include "teleop/session/record_file.hpp"
#include "teleop/wire/codec.hpp"

namespace teleop::session {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "teleop-world";

std::vector<json> world_records(const WorldSnapshot& snapshot) {
  std::vector<json> records;
  for (const auto& o : snapshot.objects) {
    json r;
    r["object"] = wire::to_json(o);
    records.push_back(std::move(r));
  }
  for (const auto& u : snapshot.connected_users) {
    json r;
    json user;
    user["user_id"] = u.user_id;
    user["platform"] = to_string(u.platform);
    r["user"] = std::move(user);
    records.push_back(std::move(r));
  }
  return records;
}

json world_meta(const WorldSnapshot& snapshot) {
  json meta;
  meta["world_seq"] = snapshot.world_seq;
  return meta;
}

}  // namespace

std::string canonical_text(const WorldSnapshot& snapshot) {
  return serialize_records(kFormat, world_meta(snapshot), world_records(snapshot));
}

void FileWorldStore::save(const WorldSnapshot& snapshot) { write_file_atomic(path_, canonical_text(snapshot)); }

std::optional<WorldSnapshot> FileWorldStore::load() {
  auto file = read_records(path_, kFormat);
  if (!file) return std::nullopt;
  WorldSnapshot snapshot;
  const auto& header = file->header;
  if (!header.contains("world_seq") || !header["world_seq"].is_number_unsigned()) {
    throw Error(Errc::store, path_.string() + ": header lacks world_seq");
  }
  snapshot.world_seq = header["world_seq"].get<std::uint64_t>();
  for (std::size_t i = 0; i < file->records.size(); ++i) {
    const auto& r = file->records[i];
    const std::string where = path_.string() + ": record " + std::to_string(i + 1);
    try {
      if (r.is_object() && r.size() == 1 && r.contains("object")) {
        snapshot.objects.push_back(wire::object_from_json(r["object"]));
      } else if (r.is_object() && r.size() == 1 && r.contains("user") && r["user"].is_object()) {
        const auto& u = r["user"];
        if (u.size() != 2 || !u.contains("user_id") || !u["user_id"].is_string() || !u.contains("platform") ||
            !u["platform"].is_string()) {
          throw Error(Errc::protocol, "malformed user entry");
        }
        snapshot.connected_users.push_back(
            {u["user_id"].get<std::string>(), parse_platform(u["platform"].get<std::string>())});
      } else {
        throw Error(Errc::protocol, "unknown record kind");
      }
    } catch (const Error& e) {
      throw Error(Errc::store, where + ": " + e.what());
    }
    if (!snapshot.objects.empty() && snapshot.objects.back().world_seq > snapshot.world_seq) {
      throw Error(Errc::store, where + ": object world_seq exceeds snapshot world_seq");
    }
  }
  return snapshot;
}

void MemoryWorldStore::save(const WorldSnapshot& snapshot) {
  std::lock_guard lock(mutex_);
  stored_ = snapshot;
}

std::optional<WorldSnapshot> MemoryWorldStore::load() {
  std::lock_guard lock(mutex_);
  return stored_;
}

WorldSnapshot restore_world(WorldStore& store, const WorldSnapshot& initial_scene) {
  if (auto loaded = store.load()) return *std::move(loaded);
  return initial_scene;
}

}  // namespace teleop::session
