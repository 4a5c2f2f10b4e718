#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "teleop/error.hpp"
#include "teleop/runtime/core.hpp"
#include "teleop/runtime/modules.hpp"

using namespace teleop;
using namespace teleop::runtime;

namespace {

proto::ModuleDescriptor descriptor(const std::string& name, bool degradable, int max_units) {
  proto::ModuleDescriptor d;
  d.name = name;
  d.version = "1.0";
  d.variants = {Variant::classic};
  d.degradable = degradable;
  d.unit_name = "unit";
  d.max_units = max_units;
  d.default_units = max_units;
  return d;
}

// Module names pick the fault: "broken" fails LOAD, "mute" never answers
// LOAD, "slow" never answers SAFE.
ModuleFactory fault_factory() {
  return [](const proto::ModuleDescriptor& d, Variant, int units) -> std::unique_ptr<Module> {
    GenericModule::Behaviour b;
    b.fail_load = d.name == "broken";
    b.silent_load = d.name == "mute";
    b.silent_safe = d.name == "slow";
    return std::make_unique<GenericModule>(d.name, units, b);
  };
}

LatencySample rtt(double ms) { return {"v", ms, 0, false}; }

}  // namespace

TEST(Estimator, SpikeAfterSteady) {
  LatencyEstimator e(0.2);
  EXPECT_FALSE(e.value().has_value());
  for (int i = 0; i < 50; ++i) e.observe(100.0);
  e.observe(1000.0);
  EXPECT_NEAR(*e.value(), 280.0, 1e-9);  // 0.8 * 100 + 0.2 * 1000
}

TEST(Estimator, ConstantConverges) {
  LatencyEstimator e(0.2);
  e.observe(1000.0);
  for (int i = 0; i < 100; ++i) e.observe(100.0);
  EXPECT_NEAR(*e.value(), oracle::ewma_after(1000.0, 100.0, 0.2, 100), 1e-9);
  EXPECT_NEAR(*e.value(), 100.0, 1e-6);
}

TEST(Estimator, RejectsBadSamples) {
  LatencyEstimator e;
  EXPECT_THROW(e.observe(-1.0), Error);
  EXPECT_THROW(e.observe(std::nan("")), Error);
  EXPECT_THROW(LatencyEstimator(0.0), Error);
}

TEST(Controller, HighDegradesStepwise) {
  ControllerConfig cfg;
  std::vector<UnitState> s{{"camera", 5, 5}};
  std::vector<int> degrees;
  for (int i = 0; i < 6; ++i) {
    const auto d = decide(300.0, cfg, s);
    if (d.empty()) break;
    degrees.push_back(d[0].second);
    s[0].active_units = d[0].second;
  }
  EXPECT_EQ(degrees, (std::vector<int>{4, 3, 2, 1, 0}));
}

TEST(Controller, BandAndNoEstimate) {
  ControllerConfig cfg;
  EXPECT_TRUE(decide(std::nullopt, cfg, {{"camera", 3, 5}}).empty());
  EXPECT_TRUE(decide(150.0, cfg, {{"camera", 3, 5}}).empty());
  EXPECT_TRUE(decide(200.0, cfg, {{"camera", 3, 5}}).empty());
  EXPECT_TRUE(decide(120.0, cfg, {{"camera", 3, 5}}).empty());
}

TEST(Controller, RecoveryFromThree) {
  ControllerConfig cfg;
  std::vector<UnitState> s{{"camera", 3, 5}};
  std::vector<int> degrees;
  for (int i = 0; i < 4; ++i) {
    const auto d = decide(50.0, cfg, s);
    if (d.empty()) break;
    degrees.push_back(d[0].second);
    s[0].active_units = d[0].second;
  }
  EXPECT_EQ(degrees, (std::vector<int>{4, 5}));
}

TEST(Controller, PriorityOrder) {
  ControllerConfig cfg;
  const std::vector<UnitState> s{{"a", 0, 2}, {"b", 2, 2}, {"c", 1, 3}};
  EXPECT_EQ(decide(500.0, cfg, s), (std::vector<std::pair<std::string, int>>{{"b", 1}}));
  EXPECT_EQ(decide(10.0, cfg, s), (std::vector<std::pair<std::string, int>>{{"c", 2}}));
}

class CoreTest : public ::testing::Test {
 protected:
  CoreTest() : core_(ControllerConfig{}, clock_, fault_factory()) { core_.set_signal_log(&log_); }
  ManualClock clock_;
  std::ostringstream log_;
  Core core_;
};

TEST_F(CoreTest, LoadCameraFiveUnits) {
  const StateReport r = core_.load_module(descriptor("camera", true, 5), Variant::classic);
  EXPECT_EQ(r.status, ModuleStatus::ok);
  EXPECT_EQ(r.active_units, 5);
  EXPECT_EQ(core_.priority(), std::vector<std::string>{"camera"});
  try {
    core_.load_module(descriptor("camera", true, 5), Variant::classic);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conflict);
  }
  EXPECT_EQ(core_.modules().size(), 1u);
}

TEST_F(CoreTest, FailedOrSilentLoadIsNotListed) {
  EXPECT_EQ(core_.load_module(descriptor("broken", false, 1), Variant::classic).status, ModuleStatus::failed);
  EXPECT_EQ(core_.load_module(descriptor("mute", false, 1), Variant::classic).status, ModuleStatus::failed);
  EXPECT_TRUE(core_.modules().empty());
}

TEST_F(CoreTest, LoadErrors) {
  EXPECT_THROW(core_.load_module(descriptor("x", false, 1), Variant::mobile), Error);
  EXPECT_THROW(core_.load_module(descriptor("x", true, 5), Variant::classic, 6), Error);
  EXPECT_THROW(core_.unload_module("ghost"), Error);
}

TEST_F(CoreTest, SafeSemantics) {
  core_.load_module(descriptor("camera", true, 5), Variant::classic);
  StateReport r = core_.send_safe("camera", 4);
  EXPECT_EQ(r.status, ModuleStatus::degraded);
  EXPECT_EQ(r.active_units, 4);
  EXPECT_EQ(core_.module("camera")->mode, Mode::safe);
  r = core_.send_safe("camera", 0);
  EXPECT_EQ(r.active_units, 0);
  EXPECT_TRUE(core_.module("camera").has_value());
  r = core_.send_safe("camera", 5);
  EXPECT_EQ(r.status, ModuleStatus::ok);
  EXPECT_EQ(core_.module("camera")->mode, Mode::classic);
  EXPECT_THROW(core_.send_safe("camera", 6), Error);

  core_.load_module(descriptor("teleop", false, 1), Variant::classic);
  try {
    core_.send_safe("teleop", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::capability);
  }
}

TEST_F(CoreTest, UnloadRemoves) {
  core_.load_module(descriptor("camera", true, 5), Variant::classic);
  core_.unload_module("camera");
  EXPECT_TRUE(core_.modules().empty());
  EXPECT_TRUE(core_.priority().empty());
}

TEST_F(CoreTest, HotAddJoinsPriorityEnd) {
  core_.load_module(descriptor("camera", true, 5), Variant::classic);
  core_.hot_add(descriptor("lidar", true, 2), Variant::classic);
  core_.hot_add(descriptor("trajectory", false, 1), Variant::classic);
  EXPECT_EQ(core_.priority(), (std::vector<std::string>{"camera", "lidar"}));
}

TEST_F(CoreTest, SilentSafeTimesOutToFailed) {
  core_.load_module(descriptor("slow", true, 3), Variant::classic);
  const StateReport r = core_.send_safe("slow", 2);
  EXPECT_EQ(r.detail, "pending");
  clock_.advance(999);
  core_.control_tick();
  EXPECT_NE(core_.module("slow")->status, ModuleStatus::failed);
  clock_.advance(1);
  core_.control_tick();
  EXPECT_EQ(core_.module("slow")->status, ModuleStatus::failed);
  const auto log = core_.signal_log();
  EXPECT_TRUE(log.back().timed_out);
  EXPECT_THROW(core_.send_safe("slow", 1), Error);
}

TEST_F(CoreTest, DeferredReportApplies) {
  core_.load_module(descriptor("slow", true, 3), Variant::classic);
  core_.send_safe("slow", 2);
  core_.report({"slow", ModuleStatus::degraded, 2, "late"});
  EXPECT_EQ(core_.module("slow")->active_units, 2);
  EXPECT_TRUE(core_.signal_log().back().deferred);
}

TEST_F(CoreTest, ControlTickFollowsEstimate) {
  core_.load_module(descriptor("camera", true, 5), Variant::classic);
  core_.observe_latency(rtt(300.0));
  auto sent = core_.control_tick();
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].signal, CoreSignal::safe(4));
  sent = core_.control_tick();
  EXPECT_EQ(sent[0].signal, CoreSignal::safe(3));
  for (int i = 0; i < 40; ++i) core_.observe_latency(rtt(10.0));
  EXPECT_EQ(core_.control_tick()[0].signal, CoreSignal::safe(4));
  EXPECT_EQ(core_.control_tick()[0].signal, CoreSignal::safe(5));
  EXPECT_TRUE(core_.control_tick().empty());
}

TEST_F(CoreTest, SignalDisciplineInLog) {
  core_.load_module(descriptor("camera", true, 5), Variant::classic);
  core_.send_safe("camera", 3);
  core_.unload_module("camera");
  const auto log = core_.signal_log();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log.front().signal, CoreSignal::load());
  EXPECT_EQ(log.back().signal, CoreSignal::unload());
  std::istringstream lines(log_.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.front(), '{');
    ++n;
  }
  EXPECT_EQ(n, 3);
}

TEST(CameraModule, UnloadStopsFrames) {
  relay::Relay relay;
  std::vector<std::string> sources;
  for (int i = 1; i <= 5; ++i) {
    sources.push_back("cam" + std::to_string(i));
    relay.register_source(sources.back(), 10.0);
  }
  CameraModule cam("camera", relay, "view", sources, 5);
  EXPECT_EQ(cam.on_signal(CoreSignal::load())->active_units, 5);
  EXPECT_EQ(relay.subscriptions("view").size(), 5u);
  EXPECT_EQ(cam.on_signal(CoreSignal::safe(4))->active_units, 4);
  EXPECT_EQ(relay.subscriptions("view").size(), 4u);
  relay.push_frame(relay::make_synthetic_frame("cam5", 1, 0, 32));
  EXPECT_EQ(relay.queued("view"), 0u);
  cam.on_signal(CoreSignal::unload());
  EXPECT_EQ(relay.push_frame(relay::make_synthetic_frame("cam1", 1, 0, 32)), 0u);
}

TEST(CameraModule, TooFewSourcesFailsLoad) {
  relay::Relay relay;
  relay.register_source("cam1", 10.0);
  CameraModule cam("camera", relay, "view", {"cam1"}, 5);
  EXPECT_EQ(cam.on_signal(CoreSignal::load())->status, ModuleStatus::failed);
}
