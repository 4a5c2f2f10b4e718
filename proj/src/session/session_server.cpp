#include "teleop/session/session_server.hpp"

#include <spdlog/spdlog.h>

#include "teleop/error.hpp"

namespace teleop::session {

robot::CommandReceipt LocalRobotLink::submit(CommandOrigin origin, const std::string& user_id,
                                             std::vector<JointConfig> waypoints) {
  if (!reachable_) throw Error(Errc::delivery, "robot server unreachable");
  return server_.submit(origin, user_id, std::move(waypoints));
}

JointConfig LocalRobotLink::current_configuration() {
  if (!reachable_) throw Error(Errc::delivery, "robot server unreachable");
  return server_.state().q;
}

WorldSnapshot startup_world(const WorldSnapshot& restored) {
  WorldSnapshot out;
  out.world_seq = restored.world_seq;
  for (auto o : restored.objects) {
    if (o.kind != ObjectKind::scene_object) continue;
    o.owner.reset();
    out.objects.push_back(std::move(o));
  }
  return out;
}

SessionServer::SessionServer(WorldSnapshot initial, const Clock& clock, SessionConfig config)
    : clock_(clock), config_(std::move(config)), world_seq_(initial.world_seq) {
  for (auto& o : initial.objects) {
    if (o.world_seq > world_seq_) {
      throw Error(Errc::store, "object '" + o.object_id + "' is newer than the snapshot");
    }
    std::string id = o.object_id;
    objects_.emplace(std::move(id), std::move(o));
  }
}

void SessionServer::set_robot_link(std::shared_ptr<RobotLink> link) {
  std::lock_guard lock(mutex_);
  robot_ = std::move(link);
}

// ---------------------------------------------------------------------------
// Helpers (mutex_ held)

SessionServer::Session& SessionServer::session_locked(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::session, "unknown or stale session '" + session_id + "'");
  return it->second;
}

ShareableObject& SessionServer::object_locked(const std::string& object_id) {
  auto it = objects_.find(object_id);
  if (it == objects_.end()) throw Error(Errc::not_found, "no object '" + object_id + "'");
  return it->second;
}

void SessionServer::send_locked(Session& session, wire::Body body) {
  if (!session.outbox) return;
  session.outbox(wire::make_envelope(config_.server_id, ++session.out_seq, clock_.now_ms(), std::move(body)));
}

void SessionServer::broadcast_locked(const wire::Body& body, const Session* except) {
  for (auto& [id, s] : sessions_) {
    if (&s == except) continue;
    send_locked(s, body);
  }
}

std::vector<UserEntry> SessionServer::users_locked() const {
  std::vector<UserEntry> users;
  users.reserve(session_by_user_.size());
  for (const auto& [user, sid] : session_by_user_) users.push_back({user, sessions_.at(sid).platform});
  return users;
}

WorldSnapshot SessionServer::snapshot_locked() const {
  WorldSnapshot s;
  s.world_seq = world_seq_;
  s.objects.reserve(objects_.size());
  for (const auto& [id, o] : objects_) s.objects.push_back(o);
  s.connected_users = users_locked();
  return s;
}

void SessionServer::send_error_locked(Session& session, const Error& error) {
  send_locked(session, wire::ErrorBody{std::string(to_string(error.code())), error.what()});
}

// ---------------------------------------------------------------------------

JoinResult SessionServer::join_session(const std::string& user_id, Platform platform, Outbox outbox) {
  if (user_id.empty()) throw Error(Errc::validation, "empty user id");
  std::lock_guard lock(mutex_);
  if (session_by_user_.count(user_id)) throw Error(Errc::duplicate, "user '" + user_id + "' already connected");

  JointConfig q = config_.default_phantom;
  if (robot_) {
    try {
      q = robot_->current_configuration();
    } catch (const Error& e) {
      spdlog::warn("phantom for {} starts at default pose: {}", user_id, e.what());
    }
  }

  const std::string session_id = "s" + std::to_string(next_session_++);
  Session& session = sessions_[session_id];
  session.user_id = user_id;
  session.platform = platform;
  session.outbox = std::move(outbox);
  session_by_user_[user_id] = session_id;

  ShareableObject phantom;
  phantom.object_id = phantom_object_id(user_id);
  phantom.kind = ObjectKind::phantom_robot;
  phantom.state = q;
  phantom.world_seq = ++world_seq_;
  objects_[phantom.object_id] = phantom;

  JoinResult result{session_id, snapshot_locked()};
  send_locked(session, wire::SnapshotBody{true, result.snapshot, {}});
  broadcast_locked(wire::JoinBody{user_id, platform}, &session);
  broadcast_locked(wire::PhantomUpdateBody{phantom.object_id, q, phantom.world_seq}, &session);
  return result;
}

std::uint64_t SessionServer::update_phantom(const std::string& session_id, const JointConfig& q) {
  std::lock_guard lock(mutex_);
  Session& session = session_locked(session_id);
  config_.limits.require(q);
  ShareableObject& phantom = object_locked(phantom_object_id(session.user_id));
  phantom.state = q;
  phantom.world_seq = ++world_seq_;
  broadcast_locked(wire::PhantomUpdateBody{phantom.object_id, q, phantom.world_seq});
  return phantom.world_seq;
}

LockResult SessionServer::acquire_lock(const std::string& session_id, const std::string& object_id) {
  std::lock_guard lock(mutex_);
  Session& session = session_locked(session_id);
  ShareableObject& object = object_locked(object_id);
  if (object.owner && *object.owner != session.user_id) {
    send_locked(session, wire::LockDenyBody{object_id, *object.owner});
    return {false, *object.owner, 0};
  }
  object.owner = session.user_id;
  object.world_seq = ++world_seq_;
  broadcast_locked(wire::LockGrantBody{object_id, session.user_id, object.world_seq});
  return {true, session.user_id, object.world_seq};
}

std::uint64_t SessionServer::release_lock(const std::string& session_id, const std::string& object_id) {
  std::lock_guard lock(mutex_);
  Session& session = session_locked(session_id);
  ShareableObject& object = object_locked(object_id);
  if (!object.owner) throw Error(Errc::ownership, "object '" + object_id + "' is not locked");
  if (*object.owner != session.user_id) {
    throw Error(Errc::ownership, "object '" + object_id + "' is held by '" + *object.owner + "'");
  }
  object.owner.reset();
  object.world_seq = ++world_seq_;
  wire::SnapshotBody delta;
  delta.full = false;
  delta.snapshot.world_seq = world_seq_;
  delta.snapshot.objects.push_back(object);
  delta.snapshot.connected_users = users_locked();
  broadcast_locked(delta);
  return object.world_seq;
}

robot::CommandReceipt SessionServer::forward_locked(Session& session, CommandOrigin origin,
                                                    std::vector<JointConfig> waypoints) {
  if (!robot_) throw Error(Errc::delivery, "no robot server connected");
  const JointConfig echo = waypoints.empty() ? JointConfig::Zero() : waypoints.back();
  robot::CommandReceipt receipt = robot_->submit(origin, session.user_id, std::move(waypoints));
  validations_.push_back({session.user_id, origin, receipt});
  send_locked(session, wire::RobotStateBody{receipt.command_id, receipt.status, echo, receipt.detail});
  return receipt;
}

robot::CommandReceipt SessionServer::validate_phantom(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  Session& session = session_locked(session_id);
  const auto& phantom = object_locked(phantom_object_id(session.user_id));
  return forward_locked(session, CommandOrigin::validate, {std::get<JointConfig>(phantom.state)});
}

robot::CommandReceipt SessionServer::request_trajectory(const std::string& session_id,
                                                        std::vector<JointConfig> waypoints) {
  std::lock_guard lock(mutex_);
  Session& session = session_locked(session_id);
  return forward_locked(session, CommandOrigin::trajectory, std::move(waypoints));
}

void SessionServer::disconnect(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return;
  const std::string user = it->second.user_id;
  sessions_.erase(it);
  session_by_user_.erase(user);

  const std::uint64_t seq = ++world_seq_;
  wire::SnapshotBody delta;
  delta.full = false;
  delta.snapshot.world_seq = seq;
  for (auto& [id, o] : objects_) {
    if (o.owner && *o.owner == user) {
      o.owner.reset();
      o.world_seq = seq;
      delta.snapshot.objects.push_back(o);
    }
  }
  const std::string phantom = phantom_object_id(user);
  if (objects_.erase(phantom)) delta.removed.push_back(phantom);
  delta.snapshot.connected_users = users_locked();
  broadcast_locked(delta);
}

void SessionServer::handle(const std::string& session_id, const wire::Envelope& msg) {
  std::unique_lock lock(mutex_);
  Session& session = session_locked(session_id);
  if (session.seen_input && msg.seq <= session.last_in_seq) {
    throw Error(Errc::protocol, "field 'seq': " + std::to_string(msg.seq) + " does not increase");
  }
  session.seen_input = true;
  session.last_in_seq = msg.seq;

  switch (msg.msg_type) {
    case wire::MsgType::ping:
      send_locked(session, wire::PongBody{msg.seq});
      return;
    case wire::MsgType::phantom_update:
    case wire::MsgType::lock_req:
    case wire::MsgType::validate:
    case wire::MsgType::robot_cmd:
      break;
    default:
      throw Error(Errc::protocol,
                  "field 'msg_type': " + std::string(wire::to_string(msg.msg_type)) + " is not accepted from clients");
  }
  lock.unlock();

  // The public operations take the lock themselves; a failure is reported
  // back to this session only.
  try {
    switch (msg.msg_type) {
      case wire::MsgType::phantom_update: {
        const auto& b = msg.as<wire::PhantomUpdateBody>();
        if (b.object_id != phantom_object_id(user_of(session_id))) {
          throw Error(Errc::ownership, "may only move your own phantom");
        }
        update_phantom(session_id, b.q);
        break;
      }
      case wire::MsgType::lock_req: {
        const auto& b = msg.as<wire::LockReqBody>();
        if (b.action == LockAction::acquire) {
          acquire_lock(session_id, b.object_id);
        } else {
          release_lock(session_id, b.object_id);
        }
        break;
      }
      case wire::MsgType::validate:
        validate_phantom(session_id);
        break;
      case wire::MsgType::robot_cmd: {
        const auto& b = msg.as<wire::RobotCmdBody>();
        if (b.origin != CommandOrigin::trajectory) {
          throw Error(Errc::validation, "single-pose commands go through VALIDATE");
        }
        request_trajectory(session_id, b.waypoints);
        break;
      }
      default:
        break;
    }
  } catch (const Error& e) {
    std::lock_guard relock(mutex_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) send_error_locked(it->second, e);
  }
}

void SessionServer::on_robot_event(const wire::RobotStateBody& event) {
  std::lock_guard lock(mutex_);
  broadcast_locked(event);
}

WorldSnapshot SessionServer::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_locked();
}

void SessionServer::persist_world(WorldStore& store) const {
  WorldSnapshot s = snapshot();
  store.save(s);
}

std::vector<ValidationRecord> SessionServer::validation_log() const {
  std::lock_guard lock(mutex_);
  return validations_;
}

std::size_t SessionServer::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::string SessionServer::user_of(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::session, "unknown or stale session '" + session_id + "'");
  return it->second.user_id;
}

}  // namespace teleop::session
