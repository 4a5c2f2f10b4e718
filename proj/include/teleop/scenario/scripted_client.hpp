#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "teleop/net/tcp_session_client.hpp"
#include "teleop/session/replica.hpp"
#include "teleop/session/session_server.hpp"

namespace teleop::scenario {

/// Headless user: a world replica plus the replies addressed to it.
/// deliver() may be called from a transport thread.
class ScriptedClient {
 public:
  ScriptedClient(std::string user_id, Platform platform);

  const std::string& user_id() const { return user_id_; }
  Platform platform() const { return platform_; }

  void deliver(const wire::Envelope& msg);

  /// Runs `fn` on the replica under the client lock.
  void inspect(const std::function<void(const session::WorldReplica&)>& fn) const;
  WorldSnapshot snapshot() const;
  /// Own phantom as last broadcast; nullopt before the join snapshot.
  std::optional<JointConfig> phantom() const;

  /// ROBOT_STATE ACCEPTED / BUSY / REJECTED replies to this client.
  std::vector<wire::RobotStateBody> receipts() const;
  std::vector<wire::LockGrantBody> grants() const;
  std::vector<wire::LockDenyBody> denies() const;
  std::vector<wire::ErrorBody> errors() const;
  /// Answers to this client's lock requests in arrival order: (object,
  /// granted). A GRANT naming another owner is not an answer.
  std::vector<std::pair<std::string, bool>> lock_responses() const;
  std::size_t received() const;

 private:
  std::string user_id_;
  Platform platform_;
  mutable std::mutex mu_;
  session::WorldReplica replica_;
  std::vector<wire::RobotStateBody> receipts_;
  std::vector<wire::LockGrantBody> grants_;
  std::vector<wire::LockDenyBody> denies_;
  std::vector<wire::ErrorBody> errors_;
  std::vector<std::pair<std::string, bool>> lock_responses_;
  std::size_t received_ = 0;
};

class ClientTransport {
 public:
  virtual ~ClientTransport() = default;
  virtual void join() = 0;
  virtual void send(wire::Body body) = 0;
  virtual void leave() = 0;
};

/// Calls the session server directly. With `wire_roundtrip` every envelope
/// in both directions passes through the JSON codec.
class LocalTransport final : public ClientTransport {
 public:
  LocalTransport(session::SessionServer& server, ScriptedClient& client, const Clock& clock,
                 bool wire_roundtrip = true);
  void join() override;
  void send(wire::Body body) override;
  void leave() override;
  const std::string& session_id() const { return session_id_; }

 private:
  session::SessionServer& server_;
  ScriptedClient& client_;
  const Clock& clock_;
  bool roundtrip_;
  std::string session_id_;
  std::uint64_t seq_ = 0;
};

/// Talks to a remote session server over TCP.
class RemoteTransport final : public ClientTransport {
 public:
  RemoteTransport(net::Endpoint server, ScriptedClient& client);
  void join() override;
  void send(wire::Body body) override;
  void leave() override;

 private:
  net::Endpoint server_;
  ScriptedClient& client_;
  std::unique_ptr<net::SessionClient> connection_;
};

}  // namespace teleop::scenario
