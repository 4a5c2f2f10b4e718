#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace teleop {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
};

/// Steady, process-local milliseconds. Used where intervals matter (probes).
class SteadyClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
  }
};

/// Virtual time advanced explicitly by a simulation driver.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_.load(); }
  void set(std::int64_t t_ms) { now_.store(t_ms); }
  void advance(std::int64_t dt_ms) { now_.fetch_add(dt_ms); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace teleop
