#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "teleop/error.hpp"
#include "teleop/scenario/scenario.hpp"

using namespace teleop;

// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 the scenario
// could not be set up.
int main(int argc, char** argv) {
  CLI::App app{"Runs a scripted scenario and checks its assertions"};
  std::string path;
  std::optional<std::uint64_t> seed;
  bool spawn_local = false;
  std::string report_path;
  std::string server;
  app.add_option("scenario", path, "Scenario XML")->required();
  app.add_option("--seed", seed, "Overrides the scenario seed");
  app.add_flag("--spawn-local", spawn_local, "Run the whole stack in-process on virtual time (default)");
  app.add_option("--report", report_path, "Write one JSON line per assertion");
  app.add_option("--server", server, "Drive a running session server instead");
  app.get_option("--spawn-local")->excludes(app.get_option("--server"));
  CLI11_PARSE(app, argc, argv);

  scenario::ScenarioReport report;
  try {
    const auto s = scenario::load_scenario(path);
    scenario::RunOptions opts;
    opts.seed = seed;
    if (!server.empty()) opts.server = net::parse_endpoint(server);
    report = scenario::run_scenario(s, opts);
  } catch (const Error& e) {
    std::cerr << "teleop-run: " << e.what() << '\n';
    return 2;
  }

  for (const auto& sig : report.signals) std::cout << "signal " << sig << '\n';
  for (const auto& r : report.results)
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << (r.detail.empty() ? "" : ": " + r.detail) << '\n';
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "teleop-run: cannot write " << report_path << '\n';
      return 2;
    }
    out << scenario::report_jsonl(report);
  }
  return report.passed() ? 0 : 1;
}
