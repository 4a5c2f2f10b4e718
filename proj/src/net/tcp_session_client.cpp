#include "teleop/net/tcp_session_client.hpp"

#include <spdlog/spdlog.h>

#include "teleop/clock.hpp"

namespace teleop::net {

SessionClient::SessionClient(const Endpoint& server, std::string user_id, Platform platform, Handler on_message)
    : connection_(connect(server)), user_id_(std::move(user_id)), on_message_(std::move(on_message)) {
  send(wire::JoinBody{user_id_, platform});
  reader_ = std::thread([this] {
    try {
      while (auto msg = connection_->receive()) on_message_(*msg);
    } catch (const std::exception& e) {
      if (!closed_) spdlog::warn("{}: connection lost: {}", user_id_, e.what());
    }
    closed_ = true;
  });
}

SessionClient::~SessionClient() { close(); }

void SessionClient::send(wire::Body body) {
  std::lock_guard lock(send_mu_);
  connection_->send(wire::make_envelope(user_id_, ++seq_, SystemClock().now_ms(), std::move(body)));
}

void SessionClient::close() {
  closed_ = true;
  connection_->shutdown();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
}

}  // namespace teleop::net
