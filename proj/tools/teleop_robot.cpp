#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <thread>

#include "signals.hpp"
#include "teleop/error.hpp"
#include "teleop/net/tcp_robot_peer.hpp"
#include "teleop/robot/config.hpp"

using namespace teleop;

int main(int argc, char** argv) {
  CLI::App app{"Simulated 6-DoF robot server"};
  std::string connect = "127.0.0.1:7400";
  std::string robot_path;
  std::string control;
  bool trajectory = false;
  app.add_option("--connect", connect, "Session server HOST:PORT");
  app.add_option("--robot", robot_path, "Robot XML (DH table, limits, motion, fixtures)");
  app.add_option("--control", control, "HOST:PORT for MODULE_SIGNAL from a core process");
  app.add_flag("--enable-trajectory", trajectory, "Accept trajectory commands without the trajectory module");
  CLI11_PARSE(app, argc, argv);

  try {
    const robot::RobotConfig config = robot_path.empty() ? robot::RobotConfig{} : robot::load_robot_config(robot_path);
    SystemClock clock;
    robot::RobotServer robot(config, clock);
    robot.set_trajectory_support(trajectory);
    std::unique_ptr<net::RobotControlServer> control_server;
    if (!control.empty()) {
      control_server = std::make_unique<net::RobotControlServer>(robot, net::parse_endpoint(control));
      spdlog::info("module control on port {}", control_server->port());
    }
    net::RobotPeer peer(robot, net::parse_endpoint(connect));
    spdlog::info("connected to session server {}", connect);

    install_stop_handler();
    std::thread stopper([&] {
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      peer.stop();
    });
    peer.run();
    g_stop = true;
    stopper.join();
    spdlog::info("{} commands executed", robot.command_log().size());
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
