#include <gtest/gtest.h>

#include "teleop/error.hpp"
#include "teleop/scenario/latency_shim.hpp"
#include "teleop/scenario/local_stack.hpp"
#include "teleop/scenario/scenario.hpp"

using namespace teleop;
using namespace teleop::scenario;

namespace {

const std::string kDir = std::string(TELEOP_SOURCE_DIR) + "/scenarios";

Errc parse_error(const std::string& body) {
  try {
    parse_scenario("<scenario name=\"t\" until_ms=\"100\">" + body + "</scenario>");
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << body;
  return Errc::setup;
}

}  // namespace

TEST(LatencyProfile, Validation) {
  EXPECT_THROW(LatencyProfile({{0, 10}, {0, 20}}), Error);
  EXPECT_THROW(LatencyProfile({{5, 10}, {3, 20}}), Error);
  EXPECT_THROW(LatencyProfile({{0, -1}}), Error);
  const LatencyProfile p({{100, 10}, {500, 300}});
  EXPECT_EQ(p.delay_at(0), 0);
  EXPECT_EQ(p.delay_at(100), 10);
  EXPECT_EQ(p.delay_at(499), 10);
  EXPECT_EQ(p.delay_at(500), 300);
}

TEST(DelayLine, FallingDelayKeepsOrder) {
  DelayLine<int> line(LatencyProfile({{0, 300}, {50, 10}}));
  line.push(0, 1);   // leaves at 300
  line.push(60, 2);  // 70 on its own, held behind item 1
  EXPECT_TRUE(line.release(299).empty());
  EXPECT_EQ(line.release(300), (std::vector<int>{1, 2}));
  line.push(400, 3);
  EXPECT_TRUE(line.release(409).empty());
  EXPECT_EQ(line.release(410), std::vector<int>{3});
}

TEST(ScenarioParse, Rejections) {
  EXPECT_EQ(parse_error(R"(<client user="a"><dance t_ms="0"/></client>)"), Errc::validation);
  EXPECT_EQ(parse_error(R"(<assert name="vibes"/>)"), Errc::validation);
  EXPECT_EQ(parse_error(R"(<client user="a"><join t_ms="0"/></client><client user="a"/>)"), Errc::validation);
  EXPECT_EQ(parse_error(R"(<client user="a"><lock t_ms="0" object="nothing"/></client>)"), Errc::validation);
  EXPECT_EQ(parse_error(R"(<latency><step t_ms="5" delay_ms="1"/><step t_ms="5" delay_ms="2"/></latency>)"),
            Errc::validation);
  EXPECT_THROW(parse_scenario("<play/>"), Error);
}

TEST(ScenarioParse, ShippedFilesLoad) {
  for (const char* name : {"safe4", "collaborate", "lock_conflict", "hot_add", "empty"}) {
    EXPECT_NO_THROW(load_scenario(kDir + "/" + name + ".xml")) << name;
  }
  EXPECT_THROW(load_scenario(kDir + "/missing.xml"), Error);
}

TEST(ScenarioRun, EmptyPasses) {
  const auto report = run_scenario(load_scenario(kDir + "/empty.xml"));
  EXPECT_TRUE(report.passed());
  EXPECT_TRUE(report.results.empty());
}

TEST(ScenarioRun, CollaborateOneCommand) {
  const auto report = run_scenario(load_scenario(kDir + "/collaborate.xml"));
  for (const auto& r : report.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  EXPECT_EQ(report.robot_commands, 1u);
}

TEST(ScenarioRun, Reproducible) {
  const Scenario s = load_scenario(kDir + "/lock_conflict.xml");
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    RunOptions opts;
    opts.seed = seed;
    const std::string first = report_jsonl(run_scenario(s, opts));
    EXPECT_EQ(report_jsonl(run_scenario(s, opts)), first);
  }
}

TEST(ScenarioRun, LockConflictHundredRuns) {
  const Scenario s = load_scenario(kDir + "/lock_conflict.xml");
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    ASSERT_TRUE(run_scenario(s, opts).passed()) << "seed " << seed;
  }
}

TEST(Provenance, DetectsMismatch) {
  robot::CommandRecord executed{1, CommandOrigin::validate, "alice", {JointConfig::Zero()}, 0, true};
  session::ValidationRecord receipt{"alice", CommandOrigin::validate, {1, RobotEventKind::accepted, ""}};
  EXPECT_FALSE(check_provenance({executed}, {receipt}, 0).has_value());
  EXPECT_TRUE(check_provenance({executed}, {}, 0).has_value());
  EXPECT_TRUE(check_provenance({}, {receipt}, 0).has_value());
  session::ValidationRecord other = receipt;
  other.user_id = "bob";
  EXPECT_TRUE(check_provenance({executed}, {other}, 0).has_value());
  EXPECT_TRUE(check_provenance({executed}, {receipt}, 1).has_value());
  session::ValidationRecord busy{"bob", CommandOrigin::validate, {1, RobotEventKind::busy, ""}};
  EXPECT_FALSE(check_provenance({executed}, {receipt, busy}, 0).has_value());
}

TEST(LocalStack, FramesReachViewAndSamplesFlow) {
  StackConfig cfg;
  cfg.latency = LatencyProfile({{0, 10}});
  LocalStack stack(cfg);
  stack.core().start(default_app(cfg.cameras));
  stack.run_until(2000);
  EXPECT_EQ(stack.view_frames().size(), 5u);
  for (const auto& [source, seqs] : stack.view_frames()) {
    EXPECT_GE(seqs.size(), 18u) << source;
    EXPECT_TRUE(std::is_sorted(seqs.begin(), seqs.end()));
  }
  ASSERT_FALSE(stack.samples().empty());
  EXPECT_EQ(stack.samples().front().rtt_ms, 10.0);
  EXPECT_NEAR(*stack.core().latency_estimate(), 10.0, 1e-9);
}
