#pragma once

#include <atomic>
#include <boost/asio/ip/tcp.hpp>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "teleop/wire/codec.hpp"

namespace teleop::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "HOST:PORT"; throws Error(validation) on malformed text.
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& endpoint);

/// Process-wide context for the blocking socket calls.
boost::asio::io_context& io_context();

/// Length-prefixed envelope stream over one TCP socket. receive() is meant
/// for a single reader thread; send() may be called from any thread.
class FramedConnection {
 public:
  explicit FramedConnection(boost::asio::ip::tcp::socket socket, std::size_t max_frame_bytes = wire::kMaxFrameBytes);
  ~FramedConnection();

  FramedConnection(const FramedConnection&) = delete;
  FramedConnection& operator=(const FramedConnection&) = delete;

  /// Blocking write. Throws Error(delivery) once the peer is gone.
  void send(const wire::Envelope& msg);
  /// Next envelope, or nullopt on orderly close. Malformed input throws the
  /// codec's error.
  std::optional<wire::Envelope> receive();

  /// Unblocks a pending receive() from another thread.
  void shutdown();
  std::string peer() const { return peer_; }

 private:
  boost::asio::ip::tcp::socket socket_;
  std::size_t max_frame_bytes_;
  std::string peer_;
  std::mutex write_mu_;
};

std::unique_ptr<FramedConnection> connect(const Endpoint& endpoint);

/// Decouples producers from a slow socket: send() queues, a writer thread
/// drains. Used where the producer holds a lock.
class QueuedSender {
 public:
  explicit QueuedSender(std::shared_ptr<FramedConnection> connection);
  ~QueuedSender();

  void send(wire::Envelope msg);
  /// Flushes what is queued, then stops the writer.
  void close();

 private:
  void run();

  std::shared_ptr<FramedConnection> connection_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<wire::Envelope> queue_;
  bool closing_ = false;
  std::thread writer_;
};

/// Accept loop on its own thread, one handler call per connection.
class Acceptor {
 public:
  using Handler = std::function<void(std::shared_ptr<FramedConnection>)>;

  Acceptor(const Endpoint& endpoint, Handler handler, std::size_t max_frame_bytes = wire::kMaxFrameBytes);
  ~Acceptor();

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void run();

  boost::asio::ip::tcp::acceptor acceptor_;
  Handler handler_;
  std::size_t max_frame_bytes_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace teleop::net
