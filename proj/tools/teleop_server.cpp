#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <thread>

#include "signals.hpp"
#include "teleop/error.hpp"
#include "teleop/net/tcp_session_server.hpp"
#include "teleop/session/scene.hpp"
#include "teleop/session/world_store.hpp"

using namespace teleop;

int main(int argc, char** argv) {
  CLI::App app{"Multi-user session server"};
  std::string listen = "127.0.0.1:7400";
  std::string store_path = "world.store";
  std::string scene_path;
  int persist_ms = 1000;
  app.add_option("--listen", listen, "HOST:PORT to accept clients and the robot server on");
  app.add_option("--store", store_path, "World store file");
  app.add_option("--scene", scene_path, "Initial scene XML, used when the store is empty");
  app.add_option("--persist-ms", persist_ms, "Interval between store writes")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    session::FileWorldStore store(store_path);
    const WorldSnapshot scene = scene_path.empty() ? session::default_scene() : session::load_scene(scene_path);
    const WorldSnapshot world = session::startup_world(session::restore_world(store, scene));
    SystemClock clock;
    session::SessionServer server(world, clock);
    server.persist_world(store);
    net::TcpSessionServer tcp(server, net::parse_endpoint(listen));
    spdlog::info("session server on port {}, world_seq {}, {} objects", tcp.port(), world.world_seq,
                 world.objects.size());

    install_stop_handler();
    auto last = std::chrono::steady_clock::now();
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      if (std::chrono::steady_clock::now() - last >= std::chrono::milliseconds(persist_ms)) {
        server.persist_world(store);
        last = std::chrono::steady_clock::now();
      }
    }
    tcp.stop();
    server.persist_world(store);
    spdlog::info("world persisted to {}", store_path);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
