#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "teleop/net/framed_connection.hpp"

namespace teleop::net {

/// User-side connection to a session server. Sends JOIN on construction;
/// every envelope from the server goes to `on_message` on a reader thread.
class SessionClient {
 public:
  using Handler = std::function<void(const wire::Envelope&)>;

  SessionClient(const Endpoint& server, std::string user_id, Platform platform, Handler on_message);
  ~SessionClient();

  /// Stamps sender, seq and time.
  void send(wire::Body body);
  void close();
  bool open() const { return !closed_; }

 private:
  std::unique_ptr<FramedConnection> connection_;
  std::string user_id_;
  Handler on_message_;
  std::mutex send_mu_;
  std::uint64_t seq_ = 0;
  std::atomic<bool> closed_{false};
  std::thread reader_;
};

}  // namespace teleop::net
