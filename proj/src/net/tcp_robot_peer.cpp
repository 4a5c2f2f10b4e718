#include "teleop/net/tcp_robot_peer.hpp"

#include <spdlog/spdlog.h>

#include "teleop/error.hpp"

namespace teleop::net {

namespace {

bool is_receipt(RobotEventKind e) {
  return e == RobotEventKind::accepted || e == RobotEventKind::busy || e == RobotEventKind::rejected;
}

std::int64_t wall_ms() { return SystemClock().now_ms(); }

}  // namespace

TcpRobotLink::TcpRobotLink(std::shared_ptr<FramedConnection> connection, const wire::RobotStateBody& hello,
                           EventSink on_event, std::chrono::milliseconds receipt_timeout)
    : connection_(std::move(connection)),
      on_event_(std::move(on_event)),
      receipt_timeout_(receipt_timeout),
      q_(hello.q),
      dispatcher_([this] { dispatch_loop(); }) {}

TcpRobotLink::~TcpRobotLink() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    cv_.notify_all();
  }
  connection_->shutdown();
  if (dispatcher_.joinable()) dispatcher_.join();
}

robot::CommandReceipt TcpRobotLink::submit(CommandOrigin origin, const std::string& user_id,
                                           std::vector<JointConfig> waypoints) {
  std::lock_guard submit_lock(submit_mu_);
  if (!connected_) throw Error(Errc::delivery, "robot server disconnected");
  {
    std::lock_guard lock(mu_);
    receipts_.clear();
  }
  wire::RobotCmdBody cmd{0, origin, user_id, std::move(waypoints)};
  connection_->send(wire::make_envelope("server", ++out_seq_, wall_ms(), std::move(cmd)));
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, receipt_timeout_, [&] { return !receipts_.empty() || !connected_; })) {
    // A late receipt would be matched to the next command; drop the link.
    connected_ = false;
    connection_->shutdown();
    throw Error(Errc::delivery,
                "robot server did not answer within " + std::to_string(receipt_timeout_.count()) + " ms");
  }
  if (receipts_.empty()) throw Error(Errc::delivery, "robot server disconnected");
  const wire::RobotStateBody r = receipts_.front();
  receipts_.pop_front();
  return {r.command_id, r.event, r.detail};
}

JointConfig TcpRobotLink::current_configuration() {
  if (!connected_) throw Error(Errc::delivery, "robot server disconnected");
  std::lock_guard lock(mu_);
  return q_;
}

void TcpRobotLink::serve() {
  try {
    while (auto msg = connection_->receive()) {
      if (msg->msg_type != wire::MsgType::robot_state) continue;
      const auto& body = msg->as<wire::RobotStateBody>();
      std::lock_guard lock(mu_);
      if (is_receipt(body.event)) {
        receipts_.push_back(body);
      } else {
        q_ = body.q;
        events_.push_back(body);
      }
      cv_.notify_all();
    }
  } catch (const std::exception& e) {
    spdlog::warn("robot link closed: {}", e.what());
  }
  std::lock_guard lock(mu_);
  connected_ = false;
  cv_.notify_all();
}

void TcpRobotLink::dispatch_loop() {
  for (;;) {
    wire::RobotStateBody event;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !events_.empty(); });
      if (events_.empty()) return;
      event = std::move(events_.front());
      events_.pop_front();
    }
    if (on_event_) on_event_(event);
  }
}

// ---------------------------------------------------------------------------

void RobotPeer::Channel::send(wire::Body body) {
  std::lock_guard lock(mu);
  connection->send(wire::make_envelope(robot_id, ++out_seq, wall_ms(), std::move(body)));
}

RobotPeer::RobotPeer(robot::RobotServer& robot, const Endpoint& server, RobotPeerOptions options)
    : robot_(robot), options_(std::move(options)), channel_(std::make_shared<Channel>()) {
  channel_->connection = connect(server);
  channel_->robot_id = options_.robot_id;
  std::weak_ptr<Channel> weak = channel_;
  robot_.add_listener([weak](const wire::RobotStateBody& event) {
    if (auto ch = weak.lock()) {
      try {
        ch->send(event);
      } catch (const Error& e) {
        spdlog::warn("robot notice not delivered: {}", e.what());
      }
    }
  });
  channel_->send(wire::RobotStateBody{0, RobotEventKind::hello, robot_.state().q, options_.robot_id});
  ticker_ = std::thread([this] {
    const double dt = std::chrono::duration<double>(options_.tick).count();
    auto next = std::chrono::steady_clock::now();
    while (!stopping_) {
      robot_.tick(dt);
      next += options_.tick;
      std::this_thread::sleep_until(next);
    }
  });
}

RobotPeer::~RobotPeer() { stop(); }

void RobotPeer::stop() {
  stopping_ = true;
  channel_->connection->shutdown();
  if (ticker_.joinable()) ticker_.join();
}

void RobotPeer::run() {
  try {
    while (auto msg = channel_->connection->receive()) {
      if (msg->msg_type == wire::MsgType::ping) {
        channel_->send(wire::PongBody{msg->seq});
        continue;
      }
      if (msg->msg_type != wire::MsgType::robot_cmd) {
        channel_->send(wire::ErrorBody{"protocol", "robot accepts ROBOT_CMD only"});
        continue;
      }
      const auto& cmd = msg->as<wire::RobotCmdBody>();
      const robot::CommandReceipt r = robot_.submit(cmd.origin, cmd.user_id, cmd.waypoints);
      channel_->send(wire::RobotStateBody{r.command_id, r.status, robot_.state().q, r.detail});
    }
  } catch (const std::exception& e) {
    if (!stopping_) spdlog::warn("robot peer stopped: {}", e.what());
  }
}

// ---------------------------------------------------------------------------

RobotControlServer::RobotControlServer(robot::RobotServer& robot, const Endpoint& listen) : robot_(robot) {
  acceptor_ = std::make_unique<Acceptor>(listen, [this](std::shared_ptr<FramedConnection> c) {
    std::lock_guard lock(mu_);
    connections_.push_back(c);
    threads_.emplace_back([this, c] { serve(c); });
  });
}

RobotControlServer::~RobotControlServer() { stop(); }

void RobotControlServer::stop() {
  if (acceptor_) acceptor_->stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (auto& c : connections_) c->shutdown();
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

void RobotControlServer::serve(std::shared_ptr<FramedConnection> connection) {
  std::uint64_t seq = 0;
  try {
    while (auto msg = connection->receive()) {
      wire::Body reply;
      if (msg->msg_type != wire::MsgType::module_signal) {
        reply = wire::ErrorBody{"protocol", "control channel accepts MODULE_SIGNAL only"};
      } else {
        const auto& sig = msg->as<wire::ModuleSignalBody>();
        StateReport report{sig.module, ModuleStatus::ok, 0, {}};
        if (sig.module != "trajectory") {
          report.status = ModuleStatus::failed;
          report.detail = "robot hosts only the trajectory module";
        } else if (sig.signal.kind == SignalKind::load) {
          robot_.set_trajectory_support(true);
          report.active_units = 1;
        } else if (sig.signal.kind == SignalKind::unload) {
          robot_.set_trajectory_support(false);
        } else {
          report.active_units = robot_.trajectory_support() ? 1 : 0;
        }
        reply = report;
      }
      connection->send(wire::make_envelope("robot", ++seq, wall_ms(), std::move(reply)));
    }
  } catch (const std::exception& e) {
    spdlog::debug("control connection closed: {}", e.what());
  }
}

StateReport send_module_signal(const Endpoint& robot_control, const std::string& module, const CoreSignal& signal) {
  auto c = connect(robot_control);
  c->send(wire::make_envelope("core", 1, wall_ms(), wire::ModuleSignalBody{module, signal}));
  auto reply = c->receive();
  if (!reply) throw Error(Errc::delivery, "robot control closed without a report");
  if (reply->msg_type == wire::MsgType::error) {
    throw Error(Errc::delivery, "robot control refused: " + reply->as<wire::ErrorBody>().message);
  }
  if (reply->msg_type != wire::MsgType::state_report) throw Error(Errc::protocol, "expected STATE_REPORT");
  return reply->as<StateReport>();
}

}  // namespace teleop::net
