#include "teleop/wire/codec.hpp"

#include <array>
#include <cmath>
#include <set>

#include "teleop/error.hpp"

namespace teleop::wire {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 16> kTypeNames{
    "JOIN",        "SNAPSHOT", "PHANTOM_UPDATE", "LOCK_REQ", "LOCK_GRANT", "LOCK_DENY",     "VALIDATE",     "ROBOT_CMD",
    "ROBOT_STATE", "FRAME",    "SUBSCRIBE",      "PING",     "PONG",       "MODULE_SIGNAL", "STATE_REPORT", "ERROR"};

// ---------------------------------------------------------------------------
// Emission

double finite(double v, const char* field) {
  if (!std::isfinite(v)) throw Error(Errc::schema, std::string("non-finite value in '") + field + "'");
  return v;
}

template <typename Derived>
json vector_json(const Eigen::MatrixBase<Derived>& v, const char* field) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(finite(v(i), field));
  return arr;
}

json pose_json(const Pose& pose) {
  json j;
  j["position"] = vector_json(pose.position, "position");
  const auto& q = pose.orientation;
  j["orientation"] = json::array({finite(q.w(), "orientation"), finite(q.x(), "orientation"),
                                  finite(q.y(), "orientation"), finite(q.z(), "orientation")});
  return j;
}

std::string hex_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

json users_json(const std::vector<UserEntry>& users) {
  json arr = json::array();
  for (const auto& u : users) {
    json e;
    e["user_id"] = u.user_id;
    e["platform"] = to_string(u.platform);
    arr.push_back(std::move(e));
  }
  return arr;
}

struct BodyWriter {
  json operator()(const JoinBody& b) const {
    json j;
    j["user_id"] = b.user_id;
    j["platform"] = to_string(b.platform);
    return j;
  }
  json operator()(const SnapshotBody& b) const {
    json j;
    j["full"] = b.full;
    j["snapshot"] = to_json(b.snapshot);
    j["removed"] = b.removed;
    return j;
  }
  json operator()(const PhantomUpdateBody& b) const {
    json j;
    j["object_id"] = b.object_id;
    j["q"] = vector_json(b.q, "q");
    j["world_seq"] = b.world_seq;
    return j;
  }
  json operator()(const LockReqBody& b) const {
    json j;
    j["object_id"] = b.object_id;
    j["action"] = to_string(b.action);
    return j;
  }
  json operator()(const LockGrantBody& b) const {
    json j;
    j["object_id"] = b.object_id;
    j["owner"] = b.owner;
    j["world_seq"] = b.world_seq;
    return j;
  }
  json operator()(const LockDenyBody& b) const {
    json j;
    j["object_id"] = b.object_id;
    j["owner"] = b.owner;
    return j;
  }
  json operator()(const ValidateBody&) const { return json::object(); }
  json operator()(const RobotCmdBody& b) const {
    json j;
    j["command_id"] = b.command_id;
    j["origin"] = to_string(b.origin);
    j["user_id"] = b.user_id;
    json wps = json::array();
    for (const auto& w : b.waypoints) wps.push_back(vector_json(w, "waypoints"));
    j["waypoints"] = std::move(wps);
    return j;
  }
  json operator()(const RobotStateBody& b) const {
    json j;
    j["command_id"] = b.command_id;
    j["event"] = to_string(b.event);
    j["q"] = vector_json(b.q, "q");
    j["detail"] = b.detail;
    return j;
  }
  json operator()(const FrameBody& b) const {
    json j;
    j["source_id"] = b.source_id;
    j["frame_seq"] = b.frame_seq;
    j["ts_ms"] = b.ts_ms;
    j["payload"] = hex_encode(b.payload);
    return j;
  }
  json operator()(const SubscribeBody& b) const {
    json j;
    j["source_id"] = b.source_id;
    j["mode"] = to_string(b.mode);
    j["group_id"] = b.group_id;
    j["nominal_rate"] = finite(b.nominal_rate, "nominal_rate");
    return j;
  }
  json operator()(const PingBody&) const { return json::object(); }
  json operator()(const PongBody& b) const {
    json j;
    j["ping_seq"] = b.ping_seq;
    return j;
  }
  json operator()(const ModuleSignalBody& b) const {
    json j;
    j["module"] = b.module;
    j["kind"] = to_string(b.signal.kind);
    const bool is_safe = b.signal.kind == SignalKind::safe;
    if (is_safe != b.signal.degree.has_value()) {
      throw Error(Errc::schema, "'degree' must be present exactly for SAFE signals");
    }
    if (is_safe) {
      if (*b.signal.degree < 0) throw Error(Errc::schema, "negative SAFE degree");
      j["degree"] = *b.signal.degree;
    }
    return j;
  }
  json operator()(const StateReportBody& b) const {
    if (b.active_units < 0) throw Error(Errc::schema, "negative 'active_units'");
    json j;
    j["module"] = b.module;
    j["status"] = to_string(b.status);
    j["active_units"] = b.active_units;
    j["detail"] = b.detail;
    return j;
  }
  json operator()(const ErrorBody& b) const {
    json j;
    j["code"] = b.code;
    j["message"] = b.message;
    return j;
  }
};

json envelope_json(const Envelope& msg) {
  if (type_of(msg.body) != msg.msg_type) {
    throw Error(Errc::schema, "body does not match msg_type " + std::string(to_string(msg.msg_type)));
  }
  if (msg.version < 1 || msg.version > kProtocolVersion) {
    throw Error(Errc::schema, "unsupported version " + std::to_string(msg.version));
  }
  json j;
  j["version"] = msg.version;
  j["seq"] = msg.seq;
  j["msg_type"] = to_string(msg.msg_type);
  j["sender"] = msg.sender;
  j["ts_ms"] = msg.ts_ms;
  j["body"] = std::visit(BodyWriter{}, msg.body);
  return j;
}

std::string dump(const json& j) {
  try {
    return j.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw Error(Errc::schema, std::string("cannot serialize: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Strict reading. Every object must carry exactly the expected keys.

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw Error(Errc::protocol, "field '" + field + "': " + what);
  }

  std::string at_path(std::string_view key) const { return path_ + "." + std::string(key); }

  const json& field(std::string_view key) {
    auto it = j_.find(std::string(key));
    if (it == j_.end()) fail(at_path(key), "missing");
    seen_.insert(std::string(key));
    return *it;
  }

  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  std::string string(std::string_view key) {
    const auto& v = field(key);
    if (!v.is_string()) fail(at_path(key), "expected string");
    return v.get<std::string>();
  }

  std::uint64_t u64(std::string_view key) {
    const auto& v = field(key);
    if (!v.is_number_unsigned()) fail(at_path(key), "expected non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::int64_t i64(std::string_view key) {
    const auto& v = field(key);
    if (!v.is_number_integer()) fail(at_path(key), "expected integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(at_path(key), "integer out of range");
    }
    return v.get<std::int64_t>();
  }

  int small_uint(std::string_view key) {
    const std::uint64_t v = u64(key);
    if (v > static_cast<std::uint64_t>(INT32_MAX)) fail(at_path(key), "integer out of range");
    return static_cast<int>(v);
  }

  double number(std::string_view key) {
    const auto& v = field(key);
    return number_value(v, at_path(key));
  }

  bool boolean(std::string_view key) {
    const auto& v = field(key);
    if (!v.is_boolean()) fail(at_path(key), "expected boolean");
    return v.get<bool>();
  }

  template <typename Parse>
  auto enumeration(std::string_view key, Parse parse) {
    const std::string text = string(key);
    try {
      return parse(text);
    } catch (const Error&) {
      fail(at_path(key), "unknown value '" + text + "'");
    }
  }

  template <int N>
  Eigen::Matrix<double, N, 1> fixed_vector(std::string_view key) {
    return vector_value<N>(field(key), at_path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at_path(it.key()), "unexpected field");
    }
  }

  static double number_value(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected number");
    return v.get<double>();
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> vector_value(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
      fail(path, "expected array of " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out(i) = number_value(v[i], path + "[" + std::to_string(i) + "]");
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

Pose pose_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  Pose pose;
  pose.position = r.fixed_vector<3>("position");
  const Eigen::Vector4d wxyz = r.fixed_vector<4>("orientation");
  pose.orientation = Eigen::Quaterniond(wxyz(0), wxyz(1), wxyz(2), wxyz(3));
  if (std::abs(wxyz.norm() - 1.0) > 1e-9) Reader::fail(r.at_path("orientation"), "quaternion not unit length");
  r.finish();
  return pose;
}

std::vector<std::uint8_t> hex_decode(const std::string& text, const std::string& path) {
  if (text.size() % 2 != 0) Reader::fail(path, "odd-length hex payload");
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    Reader::fail(path, "invalid hex digit");
  };
  std::vector<std::uint8_t> out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(text[2 * i]) << 4) | nibble(text[2 * i + 1]));
  }
  return out;
}

std::vector<UserEntry> users_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) Reader::fail(path, "expected array");
  std::vector<UserEntry> users;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Reader r(j[i], path + "[" + std::to_string(i) + "]");
    UserEntry u;
    u.user_id = r.string("user_id");
    u.platform = r.enumeration("platform", parse_platform);
    r.finish();
    users.push_back(std::move(u));
  }
  return users;
}

std::vector<std::string> strings_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) Reader::fail(path, "expected array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) Reader::fail(path + "[" + std::to_string(i) + "]", "expected string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

Body body_from_json(MsgType type, const json& j) {
  const std::string path = "body";
  Reader r(j, path);
  Body body;
  switch (type) {
    case MsgType::join: {
      JoinBody b;
      b.user_id = r.string("user_id");
      b.platform = r.enumeration("platform", parse_platform);
      body = std::move(b);
      break;
    }
    case MsgType::snapshot: {
      SnapshotBody b;
      b.full = r.boolean("full");
      b.snapshot = snapshot_from_json(r.field("snapshot"), r.at_path("snapshot"));
      b.removed = strings_from_json(r.field("removed"), r.at_path("removed"));
      body = std::move(b);
      break;
    }
    case MsgType::phantom_update: {
      PhantomUpdateBody b;
      b.object_id = r.string("object_id");
      b.q = r.fixed_vector<kJointCount>("q");
      b.world_seq = r.u64("world_seq");
      body = std::move(b);
      break;
    }
    case MsgType::lock_req: {
      LockReqBody b;
      b.object_id = r.string("object_id");
      b.action = r.enumeration("action", parse_lock_action);
      body = std::move(b);
      break;
    }
    case MsgType::lock_grant: {
      LockGrantBody b;
      b.object_id = r.string("object_id");
      b.owner = r.string("owner");
      b.world_seq = r.u64("world_seq");
      body = std::move(b);
      break;
    }
    case MsgType::lock_deny: {
      LockDenyBody b;
      b.object_id = r.string("object_id");
      b.owner = r.string("owner");
      body = std::move(b);
      break;
    }
    case MsgType::validate:
      body = ValidateBody{};
      break;
    case MsgType::robot_cmd: {
      RobotCmdBody b;
      b.command_id = r.u64("command_id");
      b.origin = r.enumeration("origin", parse_command_origin);
      b.user_id = r.string("user_id");
      const auto& wps = r.field("waypoints");
      if (!wps.is_array()) Reader::fail(r.at_path("waypoints"), "expected array");
      for (std::size_t i = 0; i < wps.size(); ++i) {
        b.waypoints.push_back(
            Reader::vector_value<kJointCount>(wps[i], r.at_path("waypoints") + "[" + std::to_string(i) + "]"));
      }
      body = std::move(b);
      break;
    }
    case MsgType::robot_state: {
      RobotStateBody b;
      b.command_id = r.u64("command_id");
      b.event = r.enumeration("event", parse_robot_event);
      b.q = r.fixed_vector<kJointCount>("q");
      b.detail = r.string("detail");
      body = std::move(b);
      break;
    }
    case MsgType::frame: {
      FrameBody b;
      b.source_id = r.string("source_id");
      b.frame_seq = r.u64("frame_seq");
      b.ts_ms = r.i64("ts_ms");
      b.payload = hex_decode(r.string("payload"), r.at_path("payload"));
      body = std::move(b);
      break;
    }
    case MsgType::subscribe: {
      SubscribeBody b;
      b.source_id = r.string("source_id");
      b.mode = r.enumeration("mode", parse_subscribe_mode);
      b.group_id = r.string("group_id");
      b.nominal_rate = r.number("nominal_rate");
      body = std::move(b);
      break;
    }
    case MsgType::ping:
      body = PingBody{};
      break;
    case MsgType::pong: {
      PongBody b;
      b.ping_seq = r.u64("ping_seq");
      body = b;
      break;
    }
    case MsgType::module_signal: {
      ModuleSignalBody b;
      b.module = r.string("module");
      b.signal.kind = r.enumeration("kind", parse_signal_kind);
      if (b.signal.kind == SignalKind::safe) {
        b.signal.degree = r.small_uint("degree");
      } else if (r.has("degree")) {
        Reader::fail(r.at_path("degree"), "only allowed on SAFE signals");
      }
      body = std::move(b);
      break;
    }
    case MsgType::state_report: {
      StateReportBody b;
      b.module = r.string("module");
      b.status = r.enumeration("status", parse_module_status);
      b.active_units = r.small_uint("active_units");
      b.detail = r.string("detail");
      body = std::move(b);
      break;
    }
    case MsgType::error: {
      ErrorBody b;
      b.code = r.string("code");
      b.message = r.string("message");
      body = std::move(b);
      break;
    }
  }
  r.finish();
  return body;
}

Envelope envelope_from_json(const json& j) {
  Reader r(j, "envelope");
  Envelope env;
  // Version is checked first so a newer peer gets a version error rather
  // than a schema complaint about fields it added.
  {
    const auto& v = r.field("version");
    if (!v.is_number_unsigned()) Reader::fail("envelope.version", "expected non-negative integer");
    const auto version = v.get<std::uint64_t>();
    if (version > static_cast<std::uint64_t>(kProtocolVersion)) {
      throw Error(Errc::version,
                  "peer speaks version " + std::to_string(version) + ", supported " + std::to_string(kProtocolVersion));
    }
    if (version < 1) Reader::fail("envelope.version", "must be at least 1");
    env.version = static_cast<int>(version);
  }
  env.seq = r.u64("seq");
  env.msg_type = r.enumeration("msg_type", parse_msg_type);
  env.sender = r.string("sender");
  env.ts_ms = r.i64("ts_ms");
  env.body = body_from_json(env.msg_type, r.field("body"));
  r.finish();
  return env;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::protocol, std::string("field 'payload': malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(MsgType type) { return kTypeNames[static_cast<std::size_t>(type)]; }

MsgType parse_msg_type(std::string_view text) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == text) return static_cast<MsgType>(i);
  }
  throw Error(Errc::protocol, "unknown msg_type '" + std::string(text) + "'");
}

json to_json(const ShareableObject& object) {
  json j;
  j["object_id"] = object.object_id;
  j["kind"] = to_string(object.kind);
  const bool is_phantom = object.kind == ObjectKind::phantom_robot;
  if (is_phantom != std::holds_alternative<JointConfig>(object.state)) {
    throw Error(Errc::schema, "object '" + object.object_id + "' state does not match its kind");
  }
  if (is_phantom) {
    j["q"] = vector_json(std::get<JointConfig>(object.state), "q");
  } else {
    j["pose"] = pose_json(std::get<Pose>(object.state));
  }
  j["owner"] = object.owner ? json(*object.owner) : json(nullptr);
  j["world_seq"] = object.world_seq;
  return j;
}

ShareableObject object_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  ShareableObject o;
  o.object_id = r.string("object_id");
  o.kind = r.enumeration("kind", parse_object_kind);
  if (o.kind == ObjectKind::phantom_robot) {
    o.state = JointConfig(r.fixed_vector<kJointCount>("q"));
  } else {
    o.state = pose_from_json(r.field("pose"), r.at_path("pose"));
  }
  const auto& owner = r.field("owner");
  if (owner.is_string()) {
    o.owner = owner.get<std::string>();
  } else if (!owner.is_null()) {
    Reader::fail(r.at_path("owner"), "expected string or null");
  }
  o.world_seq = r.u64("world_seq");
  r.finish();
  return o;
}

json to_json(const WorldSnapshot& snapshot) {
  json j;
  j["world_seq"] = snapshot.world_seq;
  json objects = json::array();
  for (const auto& o : snapshot.objects) objects.push_back(to_json(o));
  j["objects"] = std::move(objects);
  j["connected_users"] = users_json(snapshot.connected_users);
  return j;
}

WorldSnapshot snapshot_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  WorldSnapshot s;
  s.world_seq = r.u64("world_seq");
  const auto& objects = r.field("objects");
  if (!objects.is_array()) Reader::fail(r.at_path("objects"), "expected array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    s.objects.push_back(object_from_json(objects[i], r.at_path("objects") + "[" + std::to_string(i) + "]"));
  }
  s.connected_users = users_from_json(r.field("connected_users"), r.at_path("connected_users"));
  r.finish();
  return s;
}

std::string encode_payload(const Envelope& msg) { return dump(envelope_json(msg)); }

Envelope decode_payload(std::string_view json_text) { return envelope_from_json(parse_json(json_text)); }

Bytes encode_frame(const Envelope& msg) {
  const std::string payload = encode_payload(msg);
  if (payload.size() > kMaxFrameBytes) {
    throw Error(Errc::size, "payload of " + std::to_string(payload.size()) + " bytes exceeds 16 MiB");
  }
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(kHeaderBytes + payload.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) return {};
  const std::uint32_t n = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                          (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
  if (n > kMaxFrameBytes) {
    throw Error(Errc::size, "length prefix " + std::to_string(n) + " exceeds 16 MiB");
  }
  if (bytes.size() < kHeaderBytes + n) return {};
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + kHeaderBytes), n);
  DecodeResult result;
  result.envelope = decode_payload(text);
  result.consumed = kHeaderBytes + n;
  return result;
}

}  // namespace teleop::wire
