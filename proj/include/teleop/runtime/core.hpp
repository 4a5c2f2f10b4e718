#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "teleop/clock.hpp"
#include "teleop/proto/app_spec.hpp"
#include "teleop/types.hpp"

namespace teleop::runtime {

struct ControllerConfig {
  double beta = 0.2;
  double high_ms = 200.0;
  double low_ms = 120.0;
  std::int64_t control_period_ms = 500;
  int report_timeout_periods = 2;
};

/// EWMA of round-trip samples. The first sample initializes the estimate.
class LatencyEstimator {
 public:
  explicit LatencyEstimator(double beta = 0.2);
  void observe(double rtt_ms);
  std::optional<double> value() const { return value_; }
  std::size_t samples() const { return samples_; }

 private:
  double beta_;
  std::optional<double> value_;
  std::size_t samples_ = 0;
};

/// One step of the hysteresis controller over the current unit counts.
struct UnitState {
  std::string module;
  int active_units = 0;
  int requested_units = 0;
};

/// At most one (module, degree) per call: above `high` the first module in
/// priority order with units left loses one; below `low` the last module in
/// priority order that is short of its request gains one; otherwise nothing.
std::vector<std::pair<std::string, int>> decide(std::optional<double> estimate, const ControllerConfig& config,
                                                const std::vector<UnitState>& priority_ordered);

/// A functional module driven by the core. on_signal returns the state
/// report, or nullopt when the report will arrive later through
/// Core::report().
class Module {
 public:
  virtual ~Module() = default;
  virtual std::optional<StateReport> on_signal(const CoreSignal& signal) = 0;
};

using ModuleFactory =
    std::function<std::unique_ptr<Module>(const proto::ModuleDescriptor&, Variant, int requested_units)>;

enum class Mode { classic, safe };
std::string_view to_string(Mode mode);

struct LoadedModule {
  proto::ModuleDescriptor descriptor;
  Variant variant = Variant::classic;
  Mode mode = Mode::classic;
  int requested_units = 0;
  int granted_units = 0;
  int active_units = 0;
  ModuleStatus status = ModuleStatus::ok;
};

struct SignalRecord {
  std::int64_t t_ms = 0;
  std::string module;
  CoreSignal signal;
  std::optional<StateReport> report;  // none while pending or timed out
  bool timed_out = false;
  bool deferred = false;  // late report for an earlier SAFE record
};

/// The runtime core. All entry points are serialized by one mutex, which
/// gives the single ordered stream of signals, reports, samples and control
/// ticks. Modules must not call back into the core from on_signal.
class Core {
 public:
  Core(ControllerConfig config, const Clock& clock, ModuleFactory factory);

  const ControllerConfig& config() const { return config_; }

  /// Line-delimited JSON, one record per signal outcome.
  void set_signal_log(std::ostream* out);

  /// Loads every module of the application in order and adopts its
  /// degradation priority. Returns the LOAD reports.
  std::vector<StateReport> start(const proto::AppSpec& app);

  StateReport load_module(const proto::ModuleDescriptor& descriptor, Variant variant,
                          std::optional<int> requested_units = std::nullopt);
  /// load_module on a running core. Degradable modules join the end of the
  /// priority list.
  StateReport hot_add(const proto::ModuleDescriptor& descriptor, Variant variant,
                      std::optional<int> requested_units = std::nullopt);
  StateReport unload_module(const std::string& name);
  /// Returns the report, or a DEGRADED placeholder with detail "pending"
  /// when the module answers later.
  StateReport send_safe(const std::string& name, int degree);

  /// Delivers a deferred report.
  void report(const StateReport& report);

  void observe_latency(const LatencySample& sample);
  std::optional<double> latency_estimate() const;

  std::vector<std::pair<std::string, int>> decide_degradation() const;
  /// One control period: expires overdue reports, then applies the
  /// decision. Returns the signals sent.
  std::vector<SignalRecord> control_tick();

  std::vector<LoadedModule> modules() const;
  std::optional<LoadedModule> module(const std::string& name) const;
  std::vector<std::string> priority() const;
  std::vector<SignalRecord> signal_log() const;

 private:
  struct Entry {
    LoadedModule info;
    std::unique_ptr<Module> module;
    std::optional<std::int64_t> report_deadline;
    std::optional<int> pending_degree;
  };

  StateReport load_locked(const proto::ModuleDescriptor& descriptor, Variant variant, std::optional<int> units);
  StateReport safe_locked(const std::string& name, int degree);
  void apply_safe_report(Entry& e, int degree, const StateReport& report);
  Entry* find_locked(const std::string& name);
  std::vector<std::pair<std::string, int>> decide_locked() const;
  void log(SignalRecord record);

  ControllerConfig config_;
  const Clock& clock_;
  ModuleFactory factory_;
  mutable std::mutex mu_;
  LatencyEstimator estimator_;
  std::vector<Entry> entries_;  // load order
  std::vector<std::string> priority_;
  std::vector<SignalRecord> log_;
  std::ostream* log_out_ = nullptr;
};

}  // namespace teleop::runtime
