#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <thread>

#include "signals.hpp"
#include "teleop/error.hpp"
#include "teleop/net/tcp_relay_server.hpp"

using namespace teleop;

int main(int argc, char** argv) {
  CLI::App app{"Stream relay"};
  std::string listen = "127.0.0.1:7500";
  std::size_t max_frame = 1 << 20;
  std::size_t queue_bound = 64;
  int probe_ms = 100;
  app.add_option("--listen", listen, "HOST:PORT for sources and clients");
  app.add_option("--max-frame-bytes", max_frame, "Largest accepted frame payload")->check(CLI::PositiveNumber);
  app.add_option("--queue-bound", queue_bound, "Per-client queue length")->check(CLI::PositiveNumber);
  app.add_option("--probe-ms", probe_ms, "Latency probe interval, 0 disables")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    relay::RelayConfig cfg;
    cfg.max_frame_bytes = max_frame;
    cfg.queue_bound = queue_bound;
    relay::Relay relay(cfg);
    net::RelayServerOptions opts;
    opts.probe_interval = std::chrono::milliseconds(probe_ms);
    net::TcpRelayServer server(relay, net::parse_endpoint(listen), opts, [](const LatencySample& s) {
      spdlog::debug("rtt {} {} ms{}", s.source, s.rtt_ms, s.timed_out ? " (timeout)" : "");
    });
    spdlog::info("relay on port {}", server.port());
    install_stop_handler();
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
