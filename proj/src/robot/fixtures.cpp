#include "teleop/robot/fixtures.hpp"

#include <algorithm>
#include <limits>

namespace teleop::robot {

std::vector<VirtualFixture> evaluate_fixtures(const Pose& peg, std::span<const ShareableObject> objects,
                                              std::span<const VirtualFixture> prior, FixtureRadii radii) {
  if (!(radii.r_on < radii.r_off)) throw Error(Errc::validation, "fixture band requires r_on < r_off");
  std::vector<VirtualFixture> out;
  for (const auto& object : objects) {
    if (object.kind != ObjectKind::scene_object) continue;
    VirtualFixture f;
    f.object_id = object.object_id;
    f.center = std::get<Pose>(object.state).position;
    f.r_on = radii.r_on;
    f.r_off = radii.r_off;
    auto previous = std::find_if(prior.begin(), prior.end(),
                                 [&](const VirtualFixture& p) { return p.object_id == object.object_id; });
    const bool was_active = previous != prior.end() && previous->active;
    const double d = (peg.position - f.center).norm();
    if (d < f.r_on) {
      f.active = true;
    } else if (d > f.r_off) {
      f.active = false;
    } else {
      f.active = was_active;
    }
    out.push_back(std::move(f));
  }
  return out;
}

Eigen::Vector3d apply_assistance(const Eigen::Vector3d& cmd_velocity, const Pose& peg,
                                 std::span<const VirtualFixture> fixtures) {
  const VirtualFixture* nearest = nullptr;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (const auto& f : fixtures) {
    if (!f.active) continue;
    const double d = (peg.position - f.center).norm();
    if (d < nearest_d) {
      nearest_d = d;
      nearest = &f;
    }
  }
  if (nearest == nullptr) return cmd_velocity;

  const double alpha = std::clamp(1.0 - nearest_d / nearest->r_on, 0.0, 1.0);
  Eigen::Vector3d attract = Eigen::Vector3d::Zero();
  if (nearest_d >= 1e-9) attract = cmd_velocity.norm() * (nearest->center - peg.position) / nearest_d;
  return (1.0 - alpha) * cmd_velocity + alpha * attract;
}

}  // namespace teleop::robot
