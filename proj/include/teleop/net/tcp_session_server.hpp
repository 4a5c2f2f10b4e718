#pragma once

#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "teleop/net/framed_connection.hpp"
#include "teleop/session/session_server.hpp"

namespace teleop::net {

class TcpRobotLink;

/// TCP front end of a SessionServer. A connection opening with JOIN becomes
/// a user session; one opening with ROBOT_STATE HELLO becomes the robot
/// link. Anything else is answered with ERROR and closed.
class TcpSessionServer {
 public:
  TcpSessionServer(session::SessionServer& server, const Endpoint& listen);
  ~TcpSessionServer();

  std::uint16_t port() const { return acceptor_->port(); }
  bool robot_connected() const;
  void stop();

 private:
  void serve(std::shared_ptr<FramedConnection> connection);
  void serve_client(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& join);
  void serve_robot(const std::shared_ptr<FramedConnection>& connection, const wire::Envelope& hello);

  session::SessionServer& server_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<FramedConnection>> connections_;
  std::vector<std::thread> threads_;
  std::shared_ptr<TcpRobotLink> robot_;
  bool stopping_ = false;
  std::unique_ptr<Acceptor> acceptor_;
};

}  // namespace teleop::net
