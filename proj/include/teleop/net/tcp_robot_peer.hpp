#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "teleop/net/framed_connection.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/session/session_server.hpp"

namespace teleop::net {

/// Session-server side of a robot connection. submit() sends ROBOT_CMD and
/// waits for the receipt; notices are handed to `on_event` from a separate
/// dispatch thread, so a submit() holding the session lock never waits on
/// an event that needs the same lock.
class TcpRobotLink final : public session::RobotLink {
 public:
  using EventSink = std::function<void(const wire::RobotStateBody&)>;

  TcpRobotLink(std::shared_ptr<FramedConnection> connection, const wire::RobotStateBody& hello, EventSink on_event,
               std::chrono::milliseconds receipt_timeout = std::chrono::milliseconds(2000));
  ~TcpRobotLink() override;

  robot::CommandReceipt submit(CommandOrigin origin, const std::string& user_id,
                               std::vector<JointConfig> waypoints) override;
  JointConfig current_configuration() override;

  /// Reads from the connection until it closes. Runs on the caller's thread.
  void serve();
  bool connected() const { return connected_; }

 private:
  void dispatch_loop();

  std::shared_ptr<FramedConnection> connection_;
  EventSink on_event_;
  std::chrono::milliseconds receipt_timeout_;
  std::atomic<bool> connected_{true};
  std::uint64_t out_seq_ = 0;
  std::mutex submit_mu_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<wire::RobotStateBody> receipts_;
  std::deque<wire::RobotStateBody> events_;
  JointConfig q_;
  bool stopping_ = false;
  std::thread dispatcher_;
};

struct RobotPeerOptions {
  std::string robot_id = "robot";
  std::chrono::milliseconds tick{10};
};

/// Robot-process side: connects to the session server, announces itself
/// with ROBOT_STATE HELLO, executes ROBOT_CMD and streams notices back.
/// Ticks the robot in real time on its own thread.
class RobotPeer {
 public:
  RobotPeer(robot::RobotServer& robot, const Endpoint& server, RobotPeerOptions options = {});
  ~RobotPeer();

  /// Blocks until the server closes the connection or stop() is called.
  void run();
  void stop();

 private:
  struct Channel {
    std::shared_ptr<FramedConnection> connection;
    std::string robot_id;
    std::mutex mu;
    std::uint64_t out_seq = 0;
    void send(wire::Body body);
  };

  robot::RobotServer& robot_;
  RobotPeerOptions options_;
  // Shared with the robot listener, which outlives this object.
  std::shared_ptr<Channel> channel_;
  std::atomic<bool> stopping_{false};
  std::thread ticker_;
};

/// Accepts MODULE_SIGNAL for the trajectory module and answers with a
/// STATE_REPORT; lets a separate core process toggle trajectory support.
class RobotControlServer {
 public:
  RobotControlServer(robot::RobotServer& robot, const Endpoint& listen);
  ~RobotControlServer();
  std::uint16_t port() const { return acceptor_->port(); }
  void stop();

 private:
  void serve(std::shared_ptr<FramedConnection> connection);

  robot::RobotServer& robot_;
  std::mutex mu_;
  std::vector<std::shared_ptr<FramedConnection>> connections_;
  std::vector<std::thread> threads_;
  std::unique_ptr<Acceptor> acceptor_;
};

/// Client for RobotControlServer: sends one MODULE_SIGNAL and waits for the
/// report.
StateReport send_module_signal(const Endpoint& robot_control, const std::string& module, const CoreSignal& signal);

}  // namespace teleop::net
