#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "signals.hpp"
#include "teleop/error.hpp"
#include "teleop/net/tcp_relay_server.hpp"
#include "teleop/net/tcp_robot_peer.hpp"
#include "teleop/proto/app_spec.hpp"
#include "teleop/relay/relay.hpp"
#include "teleop/runtime/core.hpp"
#include "teleop/runtime/modules.hpp"

using namespace teleop;

namespace {

struct TraceSample {
  std::int64_t t_ms;
  double rtt_ms;
};

// "t_ms rtt_ms" per line; '#' starts a comment.
std::vector<TraceSample> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::setup, "cannot open " + path);
  std::vector<TraceSample> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    TraceSample s{};
    if (!(fields >> s.t_ms)) continue;
    if (!(fields >> s.rtt_ms)) throw Error(Errc::validation, path + " line " + std::to_string(n) + ": missing rtt");
    if (!out.empty() && s.t_ms < out.back().t_ms)
      throw Error(Errc::validation, path + " line " + std::to_string(n) + ": time goes backwards");
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> camera_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 1; i <= n; ++i) ids.push_back("cam" + std::to_string(i));
  return ids;
}

// Offline: feeds a recorded RTT trace to a core on virtual time and writes
// the signal log to stdout.
int replay(const proto::AppSpec& app, const std::string& trace_path, int cameras, std::int64_t until_ms) {
  const auto trace = read_trace(trace_path);
  ManualClock clock;
  relay::Relay relay(relay::RelayConfig{}, &clock);
  const auto sources = camera_ids(cameras);
  for (const auto& s : sources) relay.register_source(s, 10.0);
  runtime::ModuleEnvironment env;
  env.relay = &relay;
  env.camera_sources = sources;
  runtime::Core core(runtime::ControllerConfig{}, clock, runtime::standard_factory(env));
  core.set_signal_log(&std::cout);
  core.start(app);

  const std::int64_t period = core.config().control_period_ms;
  const std::int64_t end = std::max(until_ms, trace.empty() ? 0 : trace.back().t_ms);
  std::size_t next = 0;
  for (std::int64_t t = 0; t <= end; ++t) {
    clock.set(t);
    for (; next < trace.size() && trace[next].t_ms == t; ++next)
      core.observe_latency(LatencySample{"trace", trace[next].rtt_ms, t, false});
    if (t > 0 && t % period == 0) core.control_tick();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime core: loads an application and adapts it to measured latency"};
  std::string app_path;
  std::string signal_log;
  std::string relay_listen = "127.0.0.1:7500";
  std::string robot_control;
  std::string latency_trace;
  int cameras = 5;
  double camera_rate = 10.0;
  std::size_t frame_bytes = 256;
  std::int64_t until_ms = 0;
  app.add_option("--app", app_path, "Composed application XML")->required();
  app.add_option("--signal-log", signal_log, "Append signal records (JSONL) to this file");
  app.add_option("--relay-listen", relay_listen, "HOST:PORT of the relay hosted by the core");
  app.add_option("--cameras", cameras, "Synthetic camera sources cam1..N")->check(CLI::NonNegativeNumber);
  app.add_option("--camera-rate", camera_rate, "Synthetic frame rate per camera")->check(CLI::PositiveNumber);
  app.add_option("--frame-bytes", frame_bytes, "Synthetic frame size")->check(CLI::Range(20, 1 << 20));
  app.add_option("--robot-control", robot_control, "HOST:PORT of teleop-robot --control");
  app.add_option("--latency-trace", latency_trace, "Replay a 't_ms rtt_ms' trace offline and exit");
  app.add_option("--until-ms", until_ms, "Replay end time, at least the last sample");
  CLI11_PARSE(app, argc, argv);

  try {
    const proto::AppSpec spec = proto::load_app(app_path);
    if (auto problems = proto::validate_app(spec); !problems.empty()) {
      for (const auto& p : problems) spdlog::error("{}", p);
      return 2;
    }
    if (!latency_trace.empty()) return replay(spec, latency_trace, cameras, until_ms);

    std::ofstream log_file;
    if (!signal_log.empty()) {
      log_file.open(signal_log, std::ios::app);
      if (!log_file) throw Error(Errc::setup, "cannot open " + signal_log);
    }

    SteadyClock clock;
    relay::Relay relay(relay::RelayConfig{}, &clock);
    const auto sources = camera_ids(cameras);
    for (const auto& s : sources) relay.register_source(s, camera_rate);

    runtime::ModuleEnvironment env;
    env.relay = &relay;
    env.camera_sources = sources;
    if (!robot_control.empty()) {
      const net::Endpoint ep = net::parse_endpoint(robot_control);
      env.set_trajectory_support = [ep](bool on) {
        net::send_module_signal(ep, "trajectory", on ? CoreSignal::load() : CoreSignal::unload());
      };
    }
    runtime::Core core(runtime::ControllerConfig{}, clock, runtime::standard_factory(env));
    if (log_file.is_open()) core.set_signal_log(&log_file);
    for (const auto& r : core.start(spec))
      spdlog::info("{} {} units={} {}", r.module, to_string(r.status), r.active_units, r.detail);

    net::TcpRelayServer server(relay, net::parse_endpoint(relay_listen), {},
                               [&core](const LatencySample& s) { core.observe_latency(s); });
    spdlog::info("relay on port {}", server.port());

    install_stop_handler();
    const auto period = std::chrono::milliseconds(core.config().control_period_ms);
    const auto frame_gap = std::chrono::duration<double, std::milli>(1000.0 / camera_rate);
    auto next_tick = std::chrono::steady_clock::now() + period;
    auto next_frame = std::chrono::steady_clock::now();
    std::vector<std::uint64_t> seq(sources.size(), 0);
    while (!g_stop) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= next_frame) {
        for (std::size_t i = 0; i < sources.size(); ++i)
          relay.push_frame(relay::make_synthetic_frame(sources[i], ++seq[i], clock.now_ms(), frame_bytes));
        next_frame += std::chrono::duration_cast<std::chrono::steady_clock::duration>(frame_gap);
      }
      if (now >= next_tick) {
        for (const auto& rec : core.control_tick())
          spdlog::info("{} {} estimate={:.1f}", rec.module, to_string(rec.signal), core.latency_estimate().value_or(0));
        next_tick += period;
      }
      std::this_thread::sleep_until(std::min(next_tick, next_frame));
    }
    server.stop();
    for (const auto& m : core.modules()) core.unload_module(m.descriptor.name);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
