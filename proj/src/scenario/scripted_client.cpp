#include "teleop/scenario/scripted_client.hpp"

#include "teleop/error.hpp"
#include "teleop/wire/codec.hpp"

namespace teleop::scenario {

namespace {

bool is_receipt(RobotEventKind e) {
  return e == RobotEventKind::accepted || e == RobotEventKind::busy || e == RobotEventKind::rejected;
}

}  // namespace

ScriptedClient::ScriptedClient(std::string user_id, Platform platform)
    : user_id_(std::move(user_id)), platform_(platform) {}

void ScriptedClient::deliver(const wire::Envelope& msg) {
  std::lock_guard lock(mu_);
  ++received_;
  replica_.apply(msg);
  switch (msg.msg_type) {
    case wire::MsgType::robot_state:
      if (is_receipt(msg.as<wire::RobotStateBody>().event)) receipts_.push_back(msg.as<wire::RobotStateBody>());
      break;
    case wire::MsgType::lock_grant:
      grants_.push_back(msg.as<wire::LockGrantBody>());
      if (grants_.back().owner == user_id_) lock_responses_.emplace_back(grants_.back().object_id, true);
      break;
    case wire::MsgType::lock_deny:
      denies_.push_back(msg.as<wire::LockDenyBody>());
      lock_responses_.emplace_back(denies_.back().object_id, false);
      break;
    case wire::MsgType::error:
      errors_.push_back(msg.as<wire::ErrorBody>());
      break;
    default:
      break;
  }
}

void ScriptedClient::inspect(const std::function<void(const session::WorldReplica&)>& fn) const {
  std::lock_guard lock(mu_);
  fn(replica_);
}

WorldSnapshot ScriptedClient::snapshot() const {
  std::lock_guard lock(mu_);
  return replica_.snapshot();
}

std::optional<JointConfig> ScriptedClient::phantom() const {
  std::lock_guard lock(mu_);
  if (!replica_.has_snapshot()) return std::nullopt;
  const ShareableObject* p = replica_.snapshot().find(phantom_object_id(user_id_));
  if (!p) return std::nullopt;
  return std::get<JointConfig>(p->state);
}

std::vector<wire::RobotStateBody> ScriptedClient::receipts() const {
  std::lock_guard lock(mu_);
  return receipts_;
}

std::vector<wire::LockGrantBody> ScriptedClient::grants() const {
  std::lock_guard lock(mu_);
  return grants_;
}

std::vector<wire::LockDenyBody> ScriptedClient::denies() const {
  std::lock_guard lock(mu_);
  return denies_;
}

std::vector<wire::ErrorBody> ScriptedClient::errors() const {
  std::lock_guard lock(mu_);
  return errors_;
}

std::vector<std::pair<std::string, bool>> ScriptedClient::lock_responses() const {
  std::lock_guard lock(mu_);
  return lock_responses_;
}

std::size_t ScriptedClient::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

// ---------------------------------------------------------------------------

LocalTransport::LocalTransport(session::SessionServer& server, ScriptedClient& client, const Clock& clock,
                               bool wire_roundtrip)
    : server_(server), client_(client), clock_(clock), roundtrip_(wire_roundtrip) {}

void LocalTransport::join() {
  auto outbox = [this](const wire::Envelope& e) {
    if (roundtrip_) {
      client_.deliver(wire::decode_payload(wire::encode_payload(e)));
    } else {
      client_.deliver(e);
    }
  };
  session_id_ = server_.join_session(client_.user_id(), client_.platform(), outbox).session_id;
}

void LocalTransport::send(wire::Body body) {
  if (session_id_.empty()) throw Error(Errc::session, client_.user_id() + " has not joined");
  wire::Envelope env = wire::make_envelope(client_.user_id(), ++seq_, clock_.now_ms(), std::move(body));
  if (roundtrip_) env = wire::decode_payload(wire::encode_payload(env));
  server_.handle(session_id_, env);
}

void LocalTransport::leave() {
  if (session_id_.empty()) return;
  server_.disconnect(session_id_);
  session_id_.clear();
}

RemoteTransport::RemoteTransport(net::Endpoint server, ScriptedClient& client)
    : server_(std::move(server)), client_(client) {}

void RemoteTransport::join() {
  connection_ = std::make_unique<net::SessionClient>(server_, client_.user_id(), client_.platform(),
                                                     [this](const wire::Envelope& e) { client_.deliver(e); });
}

void RemoteTransport::send(wire::Body body) {
  if (!connection_) throw Error(Errc::session, client_.user_id() + " has not joined");
  connection_->send(std::move(body));
}

void RemoteTransport::leave() {
  if (connection_) connection_->close();
  connection_.reset();
}

}  // namespace teleop::scenario
