#include "teleop/scenario/latency_shim.hpp"

#include "teleop/error.hpp"

namespace teleop::scenario {

LatencyProfile::LatencyProfile(std::vector<LatencyStep> steps) : steps_(std::move(steps)) {
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (steps_[i].delay_ms < 0) {
      throw Error(Errc::validation, "latency step " + std::to_string(i + 1) + " has a negative delay");
    }
    if (i > 0 && steps_[i].t_ms <= steps_[i - 1].t_ms) {
      throw Error(Errc::validation, "latency step " + std::to_string(i + 1) + " does not advance t_ms");
    }
  }
}

std::int64_t LatencyProfile::delay_at(std::int64_t t_ms) const {
  std::int64_t d = 0;
  for (const auto& s : steps_) {
    if (s.t_ms > t_ms) break;
    d = s.delay_ms;
  }
  return d;
}

}  // namespace teleop::scenario
