#include "teleop/net/tcp_session_server.hpp"

#include <spdlog/spdlog.h>

#include "teleop/error.hpp"
#include "teleop/net/tcp_robot_peer.hpp"

namespace teleop::net {

namespace {

void refuse(FramedConnection& c, const Error& e) {
  try {
    c.send(wire::make_envelope("server", 1, SystemClock().now_ms(),
                               wire::ErrorBody{std::string(to_string(e.code())), e.what()}));
  } catch (const Error&) {
  }
}

}  // namespace

TcpSessionServer::TcpSessionServer(session::SessionServer& server, const Endpoint& listen) : server_(server) {
  acceptor_ = std::make_unique<Acceptor>(listen, [this](std::shared_ptr<FramedConnection> c) {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    connections_.push_back(c);
    threads_.emplace_back([this, c] { serve(c); });
  });
}

TcpSessionServer::~TcpSessionServer() { stop(); }

bool TcpSessionServer::robot_connected() const {
  std::lock_guard lock(mu_);
  return robot_ && robot_->connected();
}

void TcpSessionServer::stop() {
  acceptor_->stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    for (auto& c : connections_) c->shutdown();
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(mu_);
  if (robot_) {
    server_.set_robot_link(nullptr);
    robot_.reset();
  }
}

void TcpSessionServer::serve(std::shared_ptr<FramedConnection> connection) {
  try {
    auto first = connection->receive();
    if (!first) return;
    if (first->msg_type == wire::MsgType::join) {
      serve_client(connection, *first);
    } else if (first->msg_type == wire::MsgType::robot_state &&
               first->as<wire::RobotStateBody>().event == RobotEventKind::hello) {
      serve_robot(connection, *first);
    } else {
      refuse(*connection, Error(Errc::protocol, "field 'msg_type': first message must be JOIN"));
    }
  } catch (const Error& e) {
    spdlog::warn("connection {} closed: {}", connection->peer(), e.what());
    refuse(*connection, e);
  }
  connection->shutdown();
}

void TcpSessionServer::serve_client(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& join) {
  auto sender = std::make_shared<QueuedSender>(connection);
  const auto& body = join.as<wire::JoinBody>();
  session::JoinResult joined;
  try {
    joined = server_.join_session(body.user_id, body.platform, [sender](const wire::Envelope& e) { sender->send(e); });
  } catch (const Error& e) {
    sender->close();
    refuse(*connection, e);
    return;
  }
  spdlog::info("{} joined as {} from {}", body.user_id, joined.session_id, connection->peer());
  try {
    while (auto msg = connection->receive()) server_.handle(joined.session_id, *msg);
  } catch (const Error& e) {
    spdlog::warn("session {} dropped: {}", joined.session_id, e.what());
    server_.disconnect(joined.session_id);
    sender->close();
    refuse(*connection, e);
    return;
  }
  server_.disconnect(joined.session_id);
  sender->close();
  spdlog::info("{} left", body.user_id);
}

void TcpSessionServer::serve_robot(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& hello) {
  auto link = std::make_shared<TcpRobotLink>(connection, hello.as<wire::RobotStateBody>(),
                                             [this](const wire::RobotStateBody& e) { server_.on_robot_event(e); });
  {
    std::lock_guard lock(mu_);
    robot_ = link;
  }
  server_.set_robot_link(link);
  spdlog::info("robot server connected from {}", connection->peer());
  link->serve();
  spdlog::warn("robot server disconnected");
}

}  // namespace teleop::net
