#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

namespace teleop::scenario {

struct LatencyStep {
  std::int64_t t_ms = 0;
  std::int64_t delay_ms = 0;
  bool operator==(const LatencyStep&) const = default;
};

/// Piecewise-constant one-way delay. Steps must have strictly increasing
/// t_ms and non-negative delays; before the first step the delay is zero.
class LatencyProfile {
 public:
  LatencyProfile() = default;
  explicit LatencyProfile(std::vector<LatencyStep> steps);

  std::int64_t delay_at(std::int64_t t_ms) const;
  const std::vector<LatencyStep>& steps() const { return steps_; }

 private:
  std::vector<LatencyStep> steps_;
};

/// FIFO delay line. An item pushed at t leaves at max(t + delay(t), the
/// previous item's release), so a falling delay never reorders traffic.
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(LatencyProfile profile = {}) : profile_(std::move(profile)) {}

  void set_profile(LatencyProfile profile) { profile_ = std::move(profile); }
  const LatencyProfile& profile() const { return profile_; }

  void push(std::int64_t now_ms, T item) {
    std::int64_t release = now_ms + profile_.delay_at(now_ms);
    if (!queue_.empty() && queue_.back().first > release) release = queue_.back().first;
    queue_.emplace_back(release, std::move(item));
  }

  std::vector<T> release(std::int64_t now_ms) {
    std::vector<T> out;
    while (!queue_.empty() && queue_.front().first <= now_ms) {
      out.push_back(std::move(queue_.front().second));
      queue_.pop_front();
    }
    return out;
  }

  std::size_t size() const { return queue_.size(); }

 private:
  LatencyProfile profile_;
  std::deque<std::pair<std::int64_t, T>> queue_;
};

}  // namespace teleop::scenario
