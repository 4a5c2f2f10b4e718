#include "teleop/net/framed_connection.hpp"

#include <spdlog/spdlog.h>
#include <sys/socket.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>
#include <charconv>

#include "teleop/error.hpp"

namespace teleop::net {

namespace asio = boost::asio;
using asio::ip::tcp;

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw Error(Errc::validation, "endpoint '" + text + "' must be HOST:PORT");
  }
  Endpoint e;
  e.host = colon == 0 ? "127.0.0.1" : text.substr(0, colon);
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port > 65535) {
    throw Error(Errc::validation, "endpoint '" + text + "' has a bad port");
  }
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

asio::io_context& io_context() {
  static asio::io_context ctx;
  return ctx;
}

FramedConnection::FramedConnection(tcp::socket socket, std::size_t max_frame_bytes)
    : socket_(std::move(socket)), max_frame_bytes_(max_frame_bytes) {
  boost::system::error_code ec;
  auto remote = socket_.remote_endpoint(ec);
  peer_ = ec ? std::string("?") : remote.address().to_string() + ":" + std::to_string(remote.port());
  socket_.set_option(tcp::no_delay(true), ec);
}

FramedConnection::~FramedConnection() {
  boost::system::error_code ec;
  socket_.close(ec);
}

void FramedConnection::send(const wire::Envelope& msg) {
  const wire::Bytes bytes = wire::encode_frame(msg);
  std::lock_guard lock(write_mu_);
  boost::system::error_code ec;
  asio::write(socket_, asio::buffer(bytes), ec);
  if (ec) throw Error(Errc::delivery, "write to " + peer_ + " failed: " + ec.message());
}

std::optional<wire::Envelope> FramedConnection::receive() {
  std::uint8_t header[wire::kHeaderBytes];
  boost::system::error_code ec;
  asio::read(socket_, asio::buffer(header), ec);
  if (ec == asio::error::eof || ec == asio::error::connection_reset || ec == asio::error::operation_aborted ||
      ec == asio::error::bad_descriptor) {
    return std::nullopt;
  }
  if (ec) throw Error(Errc::delivery, "read from " + peer_ + " failed: " + ec.message());
  const std::size_t length = (std::size_t{header[0]} << 24) | (std::size_t{header[1]} << 16) |
                             (std::size_t{header[2]} << 8) | std::size_t{header[3]};
  if (length > max_frame_bytes_) {
    throw Error(Errc::size,
                "frame of " + std::to_string(length) + " bytes exceeds " + std::to_string(max_frame_bytes_));
  }
  std::string payload(length, '\0');
  asio::read(socket_, asio::buffer(payload), ec);
  if (ec == asio::error::eof) throw Error(Errc::protocol, "connection closed inside a frame");
  if (ec) throw Error(Errc::delivery, "read from " + peer_ + " failed: " + ec.message());
  return wire::decode_payload(payload);
}

void FramedConnection::shutdown() {
  // Raw shutdown: safe to call while another thread is blocked in read.
  ::shutdown(socket_.native_handle(), SHUT_RDWR);
}

std::unique_ptr<FramedConnection> connect(const Endpoint& endpoint) {
  tcp::resolver resolver(io_context());
  boost::system::error_code ec;
  auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port), ec);
  if (ec) throw Error(Errc::delivery, "cannot resolve " + to_string(endpoint) + ": " + ec.message());
  tcp::socket socket(io_context());
  asio::connect(socket, results, ec);
  if (ec) throw Error(Errc::delivery, "cannot connect to " + to_string(endpoint) + ": " + ec.message());
  return std::make_unique<FramedConnection>(std::move(socket));
}

// ---------------------------------------------------------------------------

QueuedSender::QueuedSender(std::shared_ptr<FramedConnection> connection)
    : connection_(std::move(connection)), writer_([this] { run(); }) {}

QueuedSender::~QueuedSender() { close(); }

void QueuedSender::send(wire::Envelope msg) {
  std::lock_guard lock(mu_);
  if (closing_) return;
  queue_.push_back(std::move(msg));
  cv_.notify_one();
}

void QueuedSender::close() {
  {
    std::lock_guard lock(mu_);
    closing_ = true;
    cv_.notify_one();
  }
  if (writer_.joinable() && writer_.get_id() != std::this_thread::get_id()) writer_.join();
}

void QueuedSender::run() {
  for (;;) {
    wire::Envelope msg;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) return;
      msg = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      connection_->send(msg);
    } catch (const Error& e) {
      spdlog::debug("sender to {} stopped: {}", connection_->peer(), e.what());
      std::lock_guard lock(mu_);
      queue_.clear();
      closing_ = true;
      return;
    }
  }
}

// ---------------------------------------------------------------------------

Acceptor::Acceptor(const Endpoint& endpoint, Handler handler, std::size_t max_frame_bytes)
    : acceptor_(io_context()), handler_(std::move(handler)), max_frame_bytes_(max_frame_bytes) {
  boost::system::error_code ec;
  auto address = asio::ip::make_address(endpoint.host, ec);
  if (ec) throw Error(Errc::setup, "bad listen address '" + endpoint.host + "'");
  tcp::endpoint ep(address, endpoint.port);
  acceptor_.open(ep.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(ep, ec);
  if (ec) throw Error(Errc::setup, "cannot listen on " + to_string(endpoint) + ": " + ec.message());
  acceptor_.listen();
  port_ = acceptor_.local_endpoint().port();
  thread_ = std::thread([this] { run(); });
}

Acceptor::~Acceptor() { stop(); }

void Acceptor::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
  if (thread_.joinable()) thread_.join();
  boost::system::error_code ec;
  acceptor_.close(ec);
}

void Acceptor::run() {
  while (!stopping_) {
    tcp::socket socket(io_context());
    boost::system::error_code ec;
    acceptor_.accept(socket, ec);
    if (stopping_) return;
    if (ec) {
      spdlog::warn("accept failed: {}", ec.message());
      continue;
    }
    try {
      handler_(std::make_shared<FramedConnection>(std::move(socket), max_frame_bytes_));
    } catch (const std::exception& e) {
      spdlog::warn("connection setup failed: {}", e.what());
    }
  }
}

}  // namespace teleop::net
