#include "teleop/runtime/core.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "teleop/error.hpp"

namespace teleop::runtime {

LatencyEstimator::LatencyEstimator(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(Errc::validation, "EWMA weight must lie in (0, 1]");
}

void LatencyEstimator::observe(double rtt_ms) {
  if (!std::isfinite(rtt_ms) || rtt_ms < 0.0) throw Error(Errc::validation, "latency sample must be finite and >= 0");
  value_ = value_ ? (1.0 - beta_) * *value_ + beta_ * rtt_ms : rtt_ms;
  ++samples_;
}

std::vector<std::pair<std::string, int>> decide(std::optional<double> estimate, const ControllerConfig& config,
                                                const std::vector<UnitState>& order) {
  if (!estimate) return {};
  if (*estimate > config.high_ms) {
    for (const auto& m : order) {
      if (m.active_units > 0) return {{m.module, m.active_units - 1}};
    }
  } else if (*estimate < config.low_ms) {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (it->active_units < it->requested_units) return {{it->module, it->active_units + 1}};
    }
  }
  return {};
}

std::string_view to_string(Mode mode) { return mode == Mode::classic ? "CLASSIC_MODE" : "SAFE_MODE"; }

Core::Core(ControllerConfig config, const Clock& clock, ModuleFactory factory)
    : config_(config), clock_(clock), factory_(std::move(factory)), estimator_(config.beta) {
  if (!(config_.low_ms < config_.high_ms)) throw Error(Errc::validation, "low threshold must be below high threshold");
  if (config_.control_period_ms <= 0) throw Error(Errc::validation, "control period must be positive");
}

void Core::set_signal_log(std::ostream* out) {
  std::lock_guard lock(mu_);
  log_out_ = out;
}

void Core::log(SignalRecord record) {
  if (log_out_) {
    nlohmann::ordered_json j;
    j["t_ms"] = record.t_ms;
    j["module"] = record.module;
    j["signal"] = to_string(record.signal);
    if (record.report) {
      j["status"] = to_string(record.report->status);
      j["active_units"] = record.report->active_units;
      j["detail"] = record.report->detail;
    }
    j["timed_out"] = record.timed_out;
    if (record.deferred) j["deferred"] = true;
    *log_out_ << j.dump() << '\n';
    log_out_->flush();
  }
  log_.push_back(std::move(record));
}

Core::Entry* Core::find_locked(const std::string& name) {
  for (auto& e : entries_) {
    if (e.info.descriptor.name == name) return &e;
  }
  return nullptr;
}

std::vector<StateReport> Core::start(const proto::AppSpec& app) {
  std::lock_guard lock(mu_);
  std::vector<StateReport> reports;
  for (const auto& m : app.modules) reports.push_back(load_locked(m.descriptor, m.variant, m.requested_units));
  std::vector<std::string> order;
  for (const auto& name : app.degradation_priority) {
    if (find_locked(name) && std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  }
  for (const auto& name : priority_) {
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  }
  priority_ = std::move(order);
  return reports;
}

StateReport Core::load_module(const proto::ModuleDescriptor& descriptor, Variant variant,
                              std::optional<int> requested_units) {
  std::lock_guard lock(mu_);
  return load_locked(descriptor, variant, requested_units);
}

StateReport Core::hot_add(const proto::ModuleDescriptor& descriptor, Variant variant,
                          std::optional<int> requested_units) {
  std::lock_guard lock(mu_);
  return load_locked(descriptor, variant, requested_units);
}

StateReport Core::load_locked(const proto::ModuleDescriptor& descriptor, Variant variant, std::optional<int> units) {
  if (!descriptor.has_variant(variant)) {
    throw Error(Errc::variant,
                "module '" + descriptor.name + "' has no " + std::string(to_string(variant)) + " variant");
  }
  if (find_locked(descriptor.name)) throw Error(Errc::conflict, "module '" + descriptor.name + "' is already loaded");
  const int requested = units.value_or(descriptor.default_units);
  if (requested < 0 || requested > descriptor.max_units) {
    throw Error(Errc::range, "module '" + descriptor.name + "' cannot request " + std::to_string(requested) +
                                 " units (max " + std::to_string(descriptor.max_units) + ")");
  }
  std::unique_ptr<Module> module = factory_(descriptor, variant, requested);
  std::optional<StateReport> report;
  if (module) report = module->on_signal(CoreSignal::load());
  if (!report) report = StateReport{descriptor.name, ModuleStatus::failed, 0, "no report to LOAD"};
  report->module = descriptor.name;
  log({clock_.now_ms(), descriptor.name, CoreSignal::load(), report, false});
  if (report->status == ModuleStatus::failed) return *report;

  Entry e;
  e.info.descriptor = descriptor;
  e.info.variant = variant;
  e.info.requested_units = requested;
  e.info.granted_units = requested;
  e.info.active_units = report->active_units;
  e.info.status = report->status;
  e.info.mode = report->active_units >= requested ? Mode::classic : Mode::safe;
  e.module = std::move(module);
  entries_.push_back(std::move(e));
  if (descriptor.degradable) priority_.push_back(descriptor.name);
  return *report;
}

StateReport Core::unload_module(const std::string& name) {
  std::lock_guard lock(mu_);
  auto it =
      std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.info.descriptor.name == name; });
  if (it == entries_.end()) throw Error(Errc::not_found, "module '" + name + "' is not loaded");
  std::optional<StateReport> report = it->module->on_signal(CoreSignal::unload());
  if (!report) report = StateReport{name, ModuleStatus::ok, 0, "unloaded"};
  report->module = name;
  entries_.erase(it);
  priority_.erase(std::remove(priority_.begin(), priority_.end(), name), priority_.end());
  log({clock_.now_ms(), name, CoreSignal::unload(), report, false});
  return *report;
}

StateReport Core::send_safe(const std::string& name, int degree) {
  std::lock_guard lock(mu_);
  return safe_locked(name, degree);
}

StateReport Core::safe_locked(const std::string& name, int degree) {
  Entry* e = find_locked(name);
  if (!e) throw Error(Errc::not_found, "module '" + name + "' is not loaded");
  const auto& d = e->info.descriptor;
  if (!d.degradable) throw Error(Errc::capability, "module '" + name + "' is not degradable");
  if (degree < 0 || degree > d.max_units) {
    throw Error(Errc::range, "SAFE " + std::to_string(degree) + " outside [0, " + std::to_string(d.max_units) +
                                 "] for module '" + name + "'");
  }
  if (e->info.status == ModuleStatus::failed) throw Error(Errc::capability, "module '" + name + "' has failed");
  std::optional<StateReport> report = e->module->on_signal(CoreSignal::safe(degree));
  if (!report) {
    e->pending_degree = degree;
    e->report_deadline = clock_.now_ms() + config_.report_timeout_periods * config_.control_period_ms;
    e->info.granted_units = degree;
    log({clock_.now_ms(), name, CoreSignal::safe(degree), std::nullopt, false});
    return {name, ModuleStatus::degraded, e->info.active_units, "pending"};
  }
  report->module = name;
  apply_safe_report(*e, degree, *report);
  log({clock_.now_ms(), name, CoreSignal::safe(degree), report, false});
  return *report;
}

void Core::apply_safe_report(Entry& e, int degree, const StateReport& report) {
  e.info.granted_units = degree;
  e.info.active_units = report.active_units;
  e.info.status = report.status;
  if (report.active_units > degree) {
    spdlog::warn("core: module '{}' reports {} units under SAFE {}", report.module, report.active_units, degree);
    e.info.status = ModuleStatus::failed;
  }
  e.info.mode = report.active_units >= e.info.requested_units ? Mode::classic : Mode::safe;
  e.pending_degree.reset();
  e.report_deadline.reset();
}

void Core::report(const StateReport& report) {
  std::lock_guard lock(mu_);
  Entry* e = find_locked(report.module);
  if (!e || !e->pending_degree) {
    spdlog::warn("core: unsolicited report from '{}'", report.module);
    return;
  }
  const int degree = *e->pending_degree;
  apply_safe_report(*e, degree, report);
  log({clock_.now_ms(), report.module, CoreSignal::safe(degree), report, false, true});
}

void Core::observe_latency(const LatencySample& sample) {
  std::lock_guard lock(mu_);
  estimator_.observe(sample.rtt_ms);
}

std::optional<double> Core::latency_estimate() const {
  std::lock_guard lock(mu_);
  return estimator_.value();
}

std::vector<std::pair<std::string, int>> Core::decide_locked() const {
  std::vector<UnitState> order;
  for (const auto& name : priority_) {
    for (const auto& e : entries_) {
      if (e.info.descriptor.name != name) continue;
      if (e.info.status == ModuleStatus::failed || e.pending_degree) continue;
      order.push_back({name, e.info.active_units, e.info.requested_units});
    }
  }
  return decide(estimator_.value(), config_, order);
}

std::vector<std::pair<std::string, int>> Core::decide_degradation() const {
  std::lock_guard lock(mu_);
  return decide_locked();
}

std::vector<SignalRecord> Core::control_tick() {
  std::lock_guard lock(mu_);
  const std::int64_t now = clock_.now_ms();
  for (auto& e : entries_) {
    if (e.report_deadline && now >= *e.report_deadline) {
      const int degree = *e.pending_degree;
      e.info.status = ModuleStatus::failed;
      e.pending_degree.reset();
      e.report_deadline.reset();
      spdlog::warn("core: module '{}' did not report SAFE {} in time", e.info.descriptor.name, degree);
      log({now, e.info.descriptor.name, CoreSignal::safe(degree), std::nullopt, true});
    }
  }
  std::vector<SignalRecord> sent;
  for (const auto& [name, degree] : decide_locked()) {
    safe_locked(name, degree);
    sent.push_back(log_.back());
  }
  return sent;
}

std::vector<LoadedModule> Core::modules() const {
  std::lock_guard lock(mu_);
  std::vector<LoadedModule> out;
  for (const auto& e : entries_) out.push_back(e.info);
  return out;
}

std::optional<LoadedModule> Core::module(const std::string& name) const {
  std::lock_guard lock(mu_);
  for (const auto& e : entries_) {
    if (e.info.descriptor.name == name) return e.info;
  }
  return std::nullopt;
}

std::vector<std::string> Core::priority() const {
  std::lock_guard lock(mu_);
  return priority_;
}

std::vector<SignalRecord> Core::signal_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace teleop::runtime
