#include "teleop/types.hpp"

#include <algorithm>
#include <utility>

#include "teleop/error.hpp"

namespace teleop {

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view text, std::string_view what) {
  for (const auto& [v, name] : table) {
    if (name == text) return v;
  }
  throw Error(Errc::protocol, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr NameTable<Platform, 3> kPlatforms{
    {{Platform::web, "WEB"}, {Platform::vr, "VR"}, {Platform::mobile, "MOBILE"}}};
constexpr NameTable<ObjectKind, 2> kObjectKinds{
    {{ObjectKind::scene_object, "SCENE_OBJECT"}, {ObjectKind::phantom_robot, "PHANTOM_ROBOT"}}};
constexpr NameTable<LockAction, 2> kLockActions{{{LockAction::acquire, "ACQUIRE"}, {LockAction::release, "RELEASE"}}};
constexpr NameTable<CommandOrigin, 2> kOrigins{
    {{CommandOrigin::validate, "VALIDATE"}, {CommandOrigin::trajectory, "TRAJECTORY"}}};
constexpr NameTable<RobotEventKind, 7> kRobotEvents{{{RobotEventKind::hello, "HELLO"},
                                                     {RobotEventKind::accepted, "ACCEPTED"},
                                                     {RobotEventKind::busy, "BUSY"},
                                                     {RobotEventKind::rejected, "REJECTED"},
                                                     {RobotEventKind::unreachable, "UNREACHABLE"},
                                                     {RobotEventKind::progress, "PROGRESS"},
                                                     {RobotEventKind::completed, "COMPLETED"}}};
constexpr NameTable<SubscribeMode, 4> kSubscribeModes{{{SubscribeMode::unicast, "UNICAST"},
                                                       {SubscribeMode::multicast_group, "MULTICAST_GROUP"},
                                                       {SubscribeMode::publish, "PUBLISH"},
                                                       {SubscribeMode::unsubscribe, "UNSUBSCRIBE"}}};
constexpr NameTable<SignalKind, 3> kSignalKinds{
    {{SignalKind::load, "LOAD"}, {SignalKind::unload, "UNLOAD"}, {SignalKind::safe, "SAFE"}}};
constexpr NameTable<ModuleStatus, 3> kStatuses{
    {{ModuleStatus::ok, "OK"}, {ModuleStatus::degraded, "DEGRADED"}, {ModuleStatus::failed, "FAILED"}}};
constexpr NameTable<Variant, 2> kVariants{{{Variant::classic, "CLASSIC"}, {Variant::mobile, "MOBILE"}}};

constexpr NameTable<Errc, 21> kErrcNames{{{Errc::schema, "schema"},
                                          {Errc::size, "size"},
                                          {Errc::protocol, "protocol"},
                                          {Errc::version, "version"},
                                          {Errc::duplicate, "duplicate"},
                                          {Errc::limit, "limit"},
                                          {Errc::session, "session"},
                                          {Errc::not_found, "not-found"},
                                          {Errc::ownership, "ownership"},
                                          {Errc::delivery, "delivery"},
                                          {Errc::busy, "busy"},
                                          {Errc::store, "store"},
                                          {Errc::conflict, "conflict"},
                                          {Errc::variant, "variant"},
                                          {Errc::capability, "capability"},
                                          {Errc::range, "range"},
                                          {Errc::composition, "composition"},
                                          {Errc::compatibility, "compatibility"},
                                          {Errc::validation, "validation"},
                                          {Errc::unreachable, "unreachable"},
                                          {Errc::setup, "setup"}}};

}  // namespace

std::string_view to_string(Errc code) { return name_of(kErrcNames, code); }

std::string_view to_string(Platform v) { return name_of(kPlatforms, v); }
std::string_view to_string(ObjectKind v) { return name_of(kObjectKinds, v); }
std::string_view to_string(LockAction v) { return name_of(kLockActions, v); }
std::string_view to_string(CommandOrigin v) { return name_of(kOrigins, v); }
std::string_view to_string(RobotEventKind v) { return name_of(kRobotEvents, v); }
std::string_view to_string(SubscribeMode v) { return name_of(kSubscribeModes, v); }
std::string_view to_string(SignalKind v) { return name_of(kSignalKinds, v); }
std::string_view to_string(ModuleStatus v) { return name_of(kStatuses, v); }
std::string_view to_string(Variant v) { return name_of(kVariants, v); }

Platform parse_platform(std::string_view t) { return parse_name(kPlatforms, t, "platform"); }
ObjectKind parse_object_kind(std::string_view t) { return parse_name(kObjectKinds, t, "object kind"); }
LockAction parse_lock_action(std::string_view t) { return parse_name(kLockActions, t, "lock action"); }
CommandOrigin parse_command_origin(std::string_view t) { return parse_name(kOrigins, t, "command origin"); }
RobotEventKind parse_robot_event(std::string_view t) { return parse_name(kRobotEvents, t, "robot event"); }
SubscribeMode parse_subscribe_mode(std::string_view t) { return parse_name(kSubscribeModes, t, "subscribe mode"); }
SignalKind parse_signal_kind(std::string_view t) { return parse_name(kSignalKinds, t, "signal kind"); }
ModuleStatus parse_module_status(std::string_view t) { return parse_name(kStatuses, t, "module status"); }
Variant parse_variant(std::string_view t) { return parse_name(kVariants, t, "variant"); }

std::string to_string(const CoreSignal& signal) {
  std::string out(to_string(signal.kind));
  if (signal.degree) out += " " + std::to_string(*signal.degree);
  return out;
}

const ShareableObject* WorldSnapshot::find(std::string_view object_id) const {
  auto it = std::lower_bound(objects.begin(), objects.end(), object_id,
                             [](const ShareableObject& o, std::string_view id) { return o.object_id < id; });
  if (it == objects.end() || it->object_id != object_id) return nullptr;
  return &*it;
}

}  // namespace teleop
