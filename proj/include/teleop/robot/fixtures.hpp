#pragma once

#include <span>
#include <string>
#include <vector>

#include "teleop/robot/config.hpp"
#include "teleop/types.hpp"

namespace teleop::robot {

/// Proximity-triggered guidance around one scene object. Active below r_on,
/// inactive above r_off, unchanged inside the band.
struct VirtualFixture {
  std::string object_id;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double r_on = 0.10;
  double r_off = 0.15;
  bool active = false;

  bool operator==(const VirtualFixture&) const = default;
};

/// One fixture per scene object, in object order. Phantom objects are
/// skipped. Pure function of its arguments.
std::vector<VirtualFixture> evaluate_fixtures(const Pose& peg, std::span<const ShareableObject> objects,
                                              std::span<const VirtualFixture> prior, FixtureRadii radii = {});

/// Blends the commanded velocity toward the nearest active fixture:
/// (1 - a) * cmd + a * v_attract with a = clamp(1 - d / r_on, 0, 1) and
/// v_attract of magnitude |cmd| pointing at the fixture center (zero when
/// the peg sits on the center). Returns `cmd` untouched when nothing is
/// active.
Eigen::Vector3d apply_assistance(const Eigen::Vector3d& cmd_velocity, const Pose& peg,
                                 std::span<const VirtualFixture> fixtures);

}  // namespace teleop::robot
