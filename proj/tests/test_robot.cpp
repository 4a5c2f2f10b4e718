#include <gtest/gtest.h>

#include <cmath>

#include "teleop/error.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/robot/robot_sim.hpp"

using namespace teleop;
using namespace teleop::robot;

namespace {

JointConfig joint0(double v) {
  JointConfig q = JointConfig::Zero();
  q(0) = v;
  return q;
}

int steps_to_finish(RobotSim& sim, double dt) {
  int n = 0;
  while (!sim.idle()) {
    sim.step(dt);
    ++n;
    if (n > 100000) break;
  }
  return n;
}

}  // namespace

TEST(RobotSim, IdleStepChangesNothing) {
  RobotSim sim;
  const JointConfig before = sim.state().q;
  sim.step(0.01);
  EXPECT_EQ(sim.state().q, before);
  EXPECT_TRUE(sim.take_notices().empty());
}

TEST(RobotSim, OneStepAdvancesVmaxDt) {
  RobotSim sim;  // v_max 0.5 rad/s
  sim.execute_trajectory(1, {joint0(0.5)});
  sim.step(0.01);
  EXPECT_NEAR(sim.state().q(0), 0.005, 1e-15);
  for (int i = 1; i < 6; ++i) EXPECT_EQ(sim.state().q(i), 0.0);
}

TEST(RobotSim, StepCountIsClosedForm) {
  for (double delta : {0.5, 0.123, 1.0, 0.0049}) {
    RobotSim sim;
    sim.execute_trajectory(1, {joint0(delta)});
    const int expected = static_cast<int>(std::ceil(delta / (0.5 * 0.01) - 1e-9));
    EXPECT_EQ(steps_to_finish(sim, 0.01), expected) << delta;
    EXPECT_NEAR(sim.state().q(0), delta, RobotSim::kArrivalTolerance);
  }
}

TEST(RobotSim, WaypointsVisitedInOrder) {
  RobotSim sim;
  std::vector<JointConfig> wps;
  JointConfig a = JointConfig::Zero(), b = JointConfig::Zero(), c = JointConfig::Zero();
  a(0) = 0.1;
  b(0) = 0.1, b(2) = -0.2;
  c(1) = 0.05;
  wps = {a, b, c};
  sim.execute_trajectory(7, wps);
  std::size_t next = 0;
  while (!sim.idle()) {
    sim.step(0.01);
    if (next < wps.size() && (sim.state().q - wps[next]).cwiseAbs().maxCoeff() <= 1e-6) ++next;
  }
  EXPECT_EQ(next, wps.size());
  const auto notices = sim.take_notices();
  ASSERT_FALSE(notices.empty());
  EXPECT_EQ(notices.back().kind, RobotEventKind::completed);
  EXPECT_EQ(notices.back().command_id, 7u);
}

TEST(RobotSim, RejectsBeforeMoving) {
  RobotSim sim;
  EXPECT_THROW(sim.execute_trajectory(1, {}), Error);
  try {
    sim.execute_trajectory(1, {joint0(0.1), joint0(4.0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::limit);
  }
  EXPECT_TRUE(sim.idle());
  EXPECT_EQ(sim.state().q, JointConfig::Zero());
}

TEST(RobotSim, BusyWhileExecuting) {
  RobotSim sim;
  sim.execute_trajectory(1, {joint0(0.5)});
  try {
    sim.execute_trajectory(2, {joint0(-0.5)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::busy);
  }
}

TEST(RobotSim, ZeroDisplacementCompletesAtOnce) {
  RobotSim sim;
  sim.execute_trajectory(3, {JointConfig::Zero()});
  EXPECT_TRUE(sim.idle());
  const auto notices = sim.take_notices();
  ASSERT_FALSE(notices.empty());
  EXPECT_EQ(notices.back().kind, RobotEventKind::completed);
}

TEST(RobotServer, ReceiptsAndLog) {
  ManualClock clock;
  RobotServer server(RobotConfig{}, clock);
  std::vector<wire::RobotStateBody> events;
  server.add_listener([&](const wire::RobotStateBody& e) { events.push_back(e); });

  const CommandReceipt first = server.submit(CommandOrigin::validate, "alice", {joint0(0.2)});
  EXPECT_EQ(first.status, RobotEventKind::accepted);
  const CommandReceipt busy = server.submit(CommandOrigin::validate, "bob", {joint0(-0.2)});
  EXPECT_EQ(busy.status, RobotEventKind::busy);
  EXPECT_EQ(busy.command_id, first.command_id);
  const CommandReceipt traj = server.submit(CommandOrigin::trajectory, "bob", {joint0(0.1), joint0(0.2)});
  EXPECT_EQ(traj.status, RobotEventKind::rejected);

  for (int i = 0; i < 100; ++i) server.tick(0.01);
  const auto log = server.command_log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].user_id, "alice");
  EXPECT_TRUE(log[0].completed);
  EXPECT_EQ(server.unexplained_motion(), 0u);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().event, RobotEventKind::completed);
}

TEST(RobotServer, TrajectoryGate) {
  ManualClock clock;
  RobotServer server(RobotConfig{}, clock);
  server.set_trajectory_support(true);
  const CommandReceipt r = server.submit(CommandOrigin::trajectory, "bob", {joint0(0.1), joint0(0.2)});
  EXPECT_EQ(r.status, RobotEventKind::accepted);
  const CommandReceipt bad = server.submit(CommandOrigin::validate, "bob", {joint0(9.0)});
  EXPECT_NE(bad.status, RobotEventKind::accepted);
}
