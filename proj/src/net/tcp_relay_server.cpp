#include "teleop/net/tcp_relay_server.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

#include "teleop/error.hpp"

namespace teleop::net {

namespace {

std::int64_t wall_ms() { return SystemClock().now_ms(); }

void send_error(FramedConnection& c, std::uint64_t seq, const Error& e) {
  try {
    c.send(wire::make_envelope("relay", seq, wall_ms(), wire::ErrorBody{std::string(to_string(e.code())), e.what()}));
  } catch (const Error&) {
  }
}

}  // namespace

TcpRelayServer::TcpRelayServer(relay::Relay& relay, const Endpoint& listen, RelayServerOptions options,
                               SampleSink on_sample)
    : relay_(relay), options_(options), on_sample_(std::move(on_sample)) {
  acceptor_ = std::make_unique<Acceptor>(
      listen,
      [this](std::shared_ptr<FramedConnection> c) {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        connections_.push_back(c);
        threads_.emplace_back([this, c] { serve(c); });
      },
      std::max(wire::kMaxFrameBytes, relay_.config().max_frame_bytes * 2 + 4096));
  if (options_.probe_interval.count() > 0) prober_ = std::thread([this] { probe_loop(); });
}

TcpRelayServer::~TcpRelayServer() { stop(); }

void TcpRelayServer::stop() {
  if (stopping_.exchange(true)) return;
  acceptor_->stop();
  if (prober_.joinable()) prober_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (auto& c : connections_) c->shutdown();
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

void TcpRelayServer::emit(const LatencySample& sample) {
  if (on_sample_) on_sample_(sample);
}

void TcpRelayServer::probe_loop() {
  while (!stopping_) {
    std::this_thread::sleep_for(options_.probe_interval);
    std::vector<std::string> clients;
    {
      std::lock_guard lock(mu_);
      clients = clients_;
    }
    for (const auto& id : clients) {
      try {
        relay_.send_ping(id);
      } catch (const Error&) {
      }
    }
    for (const auto& s : relay_.expire_probes()) emit(s);
  }
}

void TcpRelayServer::serve(std::shared_ptr<FramedConnection> connection) {
  try {
    auto first = connection->receive();
    if (!first) return;
    if (first->msg_type == wire::MsgType::subscribe &&
        first->as<wire::SubscribeBody>().mode == SubscribeMode::publish) {
      serve_source(*connection, *first);
    } else {
      serve_client(connection, *first);
    }
  } catch (const Error& e) {
    spdlog::warn("relay connection {} closed: {}", connection->peer(), e.what());
    send_error(*connection, 1, e);
  }
  connection->shutdown();
}

void TcpRelayServer::serve_source(FramedConnection& connection, const wire::Envelope& first) {
  const auto& reg = first.as<wire::SubscribeBody>();
  relay_.register_source(reg.source_id, reg.nominal_rate);
  spdlog::info("source {} registered from {}", reg.source_id, connection.peer());
  std::uint64_t seq = 0;
  try {
    while (auto msg = connection.receive()) {
      if (msg->msg_type != wire::MsgType::frame) {
        throw Error(Errc::protocol, "field 'msg_type': sources send FRAME only");
      }
      const Frame& f = msg->as<Frame>();
      if (f.source_id != reg.source_id) {
        throw Error(Errc::protocol, "field 'body.source_id': connection publishes '" + reg.source_id + "'");
      }
      try {
        relay_.push_frame(f);
      } catch (const Error& e) {
        send_error(connection, ++seq, e);
      }
    }
  } catch (...) {
    relay_.unregister_source(reg.source_id);
    throw;
  }
  relay_.unregister_source(reg.source_id);
}

void TcpRelayServer::serve_client(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& first) {
  const std::string client_id = first.sender;
  relay_.attach_client(client_id);
  {
    std::lock_guard lock(mu_);
    clients_.push_back(client_id);
  }
  std::atomic<bool> done{false};
  std::thread writer([&] {
    while (!done) {
      auto env = relay_.pop(client_id, std::chrono::milliseconds(50));
      if (!env) continue;
      try {
        connection->send(*env);
      } catch (const Error&) {
        return;
      }
    }
  });

  std::uint64_t err_seq = 1u << 30;
  auto handle = [&](const wire::Envelope& msg) {
    try {
      switch (msg.msg_type) {
        case wire::MsgType::subscribe: {
          const auto& s = msg.as<wire::SubscribeBody>();
          if (s.mode == SubscribeMode::unsubscribe) {
            relay_.unsubscribe(client_id, s.source_id);
          } else {
            relay_.subscribe(client_id, s.source_id, s.mode, s.group_id);
          }
          break;
        }
        case wire::MsgType::pong:
          if (auto sample = relay_.on_pong(client_id, msg.as<wire::PongBody>())) emit(*sample);
          break;
        default:
          throw Error(Errc::protocol, "field 'msg_type': " + std::string(wire::to_string(msg.msg_type)) +
                                          " is not accepted from relay clients");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::protocol) throw;
      send_error(*connection, ++err_seq, e);
    }
  };

  try {
    handle(first);
    while (auto msg = connection->receive()) handle(*msg);
  } catch (...) {
    done = true;
    writer.join();
    relay_.disconnect_client(client_id);
    std::lock_guard lock(mu_);
    clients_.erase(std::remove(clients_.begin(), clients_.end(), client_id), clients_.end());
    throw;
  }
  done = true;
  writer.join();
  relay_.disconnect_client(client_id);
  std::lock_guard lock(mu_);
  clients_.erase(std::remove(clients_.begin(), clients_.end(), client_id), clients_.end());
}

// ---------------------------------------------------------------------------

RelayClient::RelayClient(const Endpoint& relay, std::string client_id)
    : connection_(connect(relay)), client_id_(std::move(client_id)) {}

void RelayClient::send(wire::Body body) {
  connection_->send(wire::make_envelope(client_id_, ++seq_, wall_ms(), std::move(body)));
}

void RelayClient::subscribe(const std::string& source_id, SubscribeMode mode, const std::string& group_id) {
  send(wire::SubscribeBody{source_id, mode, group_id, 0.0});
}

std::optional<Frame> RelayClient::next_frame() {
  while (auto msg = connection_->receive()) {
    switch (msg->msg_type) {
      case wire::MsgType::frame:
        return msg->as<Frame>();
      case wire::MsgType::ping:
        send(wire::PongBody{msg->seq});
        break;
      case wire::MsgType::error:
        throw Error(Errc::delivery, "relay: " + msg->as<wire::ErrorBody>().message);
      default:
        break;
    }
  }
  return std::nullopt;
}

void RelayClient::close() { connection_->shutdown(); }

RelaySource::RelaySource(const Endpoint& relay, std::string source_id, double nominal_rate)
    : connection_(connect(relay)), source_id_(std::move(source_id)) {
  connection_->send(wire::make_envelope(source_id_, ++seq_, wall_ms(),
                                        wire::SubscribeBody{source_id_, SubscribeMode::publish, {}, nominal_rate}));
}

void RelaySource::push(const Frame& frame) {
  connection_->send(wire::make_envelope(source_id_, ++seq_, wall_ms(), frame));
}

void RelaySource::close() { connection_->shutdown(); }

}  // namespace teleop::net
