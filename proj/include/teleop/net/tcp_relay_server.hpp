#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "teleop/net/framed_connection.hpp"
#include "teleop/relay/relay.hpp"

namespace teleop::net {

struct RelayServerOptions {
  /// Zero disables the periodic probes.
  std::chrono::milliseconds probe_interval{100};
};

/// TCP front end of a Relay. A connection whose first message is SUBSCRIBE
/// with mode PUBLISH is a source and then sends FRAMEs; every other
/// connection is a client named by its envelope sender, which subscribes,
/// receives FRAMEs and PINGs, and answers PINGs with PONG.
class TcpRelayServer {
 public:
  using SampleSink = std::function<void(const LatencySample&)>;

  TcpRelayServer(relay::Relay& relay, const Endpoint& listen, RelayServerOptions options = {},
                 SampleSink on_sample = {});
  ~TcpRelayServer();

  std::uint16_t port() const { return acceptor_->port(); }
  void stop();

 private:
  void serve(std::shared_ptr<FramedConnection> connection);
  void serve_source(FramedConnection& connection, const wire::Envelope& first);
  void serve_client(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& first);
  void probe_loop();
  void emit(const LatencySample& sample);

  relay::Relay& relay_;
  RelayServerOptions options_;
  SampleSink on_sample_;
  std::mutex mu_;
  std::vector<std::shared_ptr<FramedConnection>> connections_;
  std::vector<std::thread> threads_;
  std::vector<std::string> clients_;
  std::atomic<bool> stopping_{false};
  std::thread prober_;
  std::unique_ptr<Acceptor> acceptor_;
};

/// Client end used by tools and tests: owns a connection to the relay.
class RelayClient {
 public:
  RelayClient(const Endpoint& relay, std::string client_id);
  void subscribe(const std::string& source_id, SubscribeMode mode, const std::string& group_id = {});
  /// Next FRAME; PINGs met on the way are answered automatically.
  std::optional<Frame> next_frame();
  void close();

 private:
  void send(wire::Body body);

  std::unique_ptr<FramedConnection> connection_;
  std::string client_id_;
  std::uint64_t seq_ = 0;
};

/// Source end: registers on construction, then pushes frames.
class RelaySource {
 public:
  RelaySource(const Endpoint& relay, std::string source_id, double nominal_rate);
  void push(const Frame& frame);
  void close();

 private:
  std::unique_ptr<FramedConnection> connection_;
  std::string source_id_;
  std::uint64_t seq_ = 0;
};

}  // namespace teleop::net
