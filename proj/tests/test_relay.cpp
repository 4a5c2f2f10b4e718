#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <thread>

#include "teleop/error.hpp"
#include "teleop/relay/relay.hpp"

using namespace teleop;
using namespace teleop::relay;
using namespace std::chrono_literals;

namespace {

std::vector<std::uint64_t> frame_seqs(const std::vector<wire::Envelope>& envs) {
  std::vector<std::uint64_t> out;
  for (const auto& e : envs)
    if (e.msg_type == wire::MsgType::frame) out.push_back(e.as<Frame>().frame_seq);
  return out;
}

}  // namespace

TEST(Relay, FiveSourcesRegister) {
  Relay relay;
  for (int i = 1; i <= 5; ++i) relay.register_source("cam" + std::to_string(i), 10.0);
  EXPECT_EQ(relay.sources().size(), 5u);
  try {
    relay.register_source("cam1", 30.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conflict);
  }
}

TEST(Relay, UnicastEachFrameOnce) {
  Relay relay;
  relay.register_source("cam", 10.0);
  for (const char* c : {"a", "b", "c", "d"}) {
    relay.connect_client(c);
    relay.subscribe(c, "cam", SubscribeMode::unicast);
  }
  for (std::uint64_t s = 1; s <= 10; ++s) EXPECT_EQ(relay.push_frame(make_synthetic_frame("cam", s, 0, 64)), 4u);
  for (const char* c : {"a", "b", "c", "d"}) {
    const auto envs = relay.drain(c);
    EXPECT_EQ(frame_seqs(envs), (std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
    for (const auto& e : envs) EXPECT_TRUE(synthetic_frame_intact(e.as<Frame>()));
  }
}

TEST(Relay, MulticastGroupIdentical) {
  Relay relay;
  relay.register_source("cam", 10.0);
  for (const char* c : {"a", "b", "c"}) {
    relay.connect_client(c);
    relay.subscribe(c, "cam", SubscribeMode::multicast_group, "g");
  }
  for (std::uint64_t s = 1; s <= 50; ++s) relay.push_frame(make_synthetic_frame("cam", s, 0, 32));
  const auto a = frame_seqs(relay.drain("a"));
  EXPECT_EQ(a.size(), 50u);
  EXPECT_EQ(frame_seqs(relay.drain("b")), a);
  EXPECT_EQ(frame_seqs(relay.drain("c")), a);
}

TEST(Relay, MulticastNeedsGroupAndValidMode) {
  Relay relay;
  relay.register_source("cam", 10.0);
  relay.connect_client("a");
  EXPECT_THROW(relay.subscribe("a", "cam", SubscribeMode::multicast_group), Error);
  EXPECT_THROW(relay.subscribe("a", "cam", SubscribeMode::publish), Error);
  EXPECT_THROW(relay.subscribe("a", "nope", SubscribeMode::unicast), Error);
}

TEST(Relay, NoBackfillMidStream) {
  Relay relay;
  relay.register_source("cam", 10.0);
  relay.connect_client("late");
  for (std::uint64_t s = 1; s <= 5; ++s) relay.push_frame(make_synthetic_frame("cam", s, 0, 32));
  relay.subscribe("late", "cam", SubscribeMode::unicast);
  relay.push_frame(make_synthetic_frame("cam", 6, 0, 32));
  EXPECT_EQ(frame_seqs(relay.drain("late")), std::vector<std::uint64_t>{6});
}

TEST(Relay, StalledSubscriberDropsSentMinusBound) {
  for (std::size_t pushed : {5u, 8u, 9u, 100u, 257u}) {
    RelayConfig cfg;
    cfg.queue_bound = 8;
    Relay relay(cfg);
    relay.register_source("cam", 10.0);
    relay.connect_client("slow");
    relay.subscribe("slow", "cam", SubscribeMode::unicast);
    for (std::uint64_t s = 1; s <= pushed; ++s) relay.push_frame(make_synthetic_frame("cam", s, 0, 16));
    const auto got = frame_seqs(relay.drain("slow"));
    const DeliveryStats st = relay.stats("slow", "cam");
    const std::uint64_t expected_drops = pushed > 8 ? pushed - 8 : 0;
    EXPECT_EQ(st.sent, pushed);
    EXPECT_EQ(st.dropped, expected_drops);
    EXPECT_EQ(st.delivered + st.dropped, pushed);
    ASSERT_EQ(got.size(), pushed - expected_drops);
    EXPECT_EQ(got.back(), pushed);  // newest kept
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

TEST(Relay, SequenceGapFlagsSource) {
  Relay relay;
  relay.register_source("cam", 10.0);
  relay.push_frame(make_synthetic_frame("cam", 1, 0, 16));
  try {
    relay.push_frame(make_synthetic_frame("cam", 3, 0, 16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::protocol);
  }
  EXPECT_TRUE(relay.source_flagged("cam"));
}

TEST(Relay, UnregisteredAndOversize) {
  RelayConfig cfg;
  cfg.max_frame_bytes = 64;
  Relay relay(cfg);
  EXPECT_THROW(relay.push_frame(make_synthetic_frame("ghost", 1, 0, 16)), Error);
  relay.register_source("cam", 10.0);
  try {
    relay.push_frame(make_synthetic_frame("cam", 1, 0, 65));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::size);
  }
}

TEST(Relay, UnsubscribeWithdrawsQueuedFrames) {
  Relay relay;
  relay.register_source("cam", 10.0);
  relay.connect_client("a");
  relay.subscribe("a", "cam", SubscribeMode::unicast);
  for (std::uint64_t s = 1; s <= 4; ++s) relay.push_frame(make_synthetic_frame("cam", s, 0, 16));
  relay.unsubscribe("a", "cam");
  relay.push_frame(make_synthetic_frame("cam", 5, 0, 16));
  EXPECT_TRUE(frame_seqs(relay.drain("a")).empty());
}

TEST(Relay, ProbeRoundTripWithManualClock) {
  ManualClock clock(1000);
  Relay relay(RelayConfig{}, &clock);
  relay.connect_client("v");
  const auto seq = relay.send_ping("v");
  const auto envs = relay.drain("v");
  ASSERT_EQ(envs.size(), 1u);
  EXPECT_EQ(envs[0].msg_type, wire::MsgType::ping);
  EXPECT_EQ(envs[0].seq, seq);
  clock.advance(37);
  const auto sample = relay.on_pong("v", wire::PongBody{seq});
  ASSERT_TRUE(sample.has_value());
  EXPECT_EQ(sample->rtt_ms, 37.0);
  EXPECT_FALSE(relay.on_pong("v", wire::PongBody{seq}).has_value());
}

TEST(Relay, UnansweredProbeTimesOut) {
  ManualClock clock;
  Relay relay(RelayConfig{}, &clock);
  relay.connect_client("v");
  relay.send_ping("v");
  clock.advance(1999);
  EXPECT_TRUE(relay.expire_probes().empty());
  clock.advance(1);
  const auto expired = relay.expire_probes();
  ASSERT_EQ(expired.size(), 1u);
  EXPECT_TRUE(expired[0].timed_out);
  EXPECT_EQ(expired[0].rtt_ms, 2000.0);
}

TEST(Relay, MeasureLatencyLoopbackAndInjected) {
  Relay relay;
  relay.connect_client("v");
  for (auto delay : {0ms, 300ms}) {
    std::thread answer([&] {
      auto ping = relay.pop("v", 2000ms);
      ASSERT_TRUE(ping.has_value());
      std::this_thread::sleep_for(delay);
      relay.on_pong("v", wire::PongBody{ping->seq});
    });
    const LatencySample s = relay.measure_latency("v");
    answer.join();
    EXPECT_FALSE(s.timed_out);
    if (delay == 0ms) {
      EXPECT_LT(s.rtt_ms, 50.0);
    } else {
      EXPECT_GE(s.rtt_ms, 300.0);
      EXPECT_LT(s.rtt_ms, 400.0);
    }
  }
}

TEST(Relay, StallDoesNotBlockSource) {
  RelayConfig cfg;
  cfg.queue_bound = 8;
  Relay relay(cfg);
  relay.register_source("cam", 10.0);
  relay.connect_client("slow");
  relay.subscribe("slow", "cam", SubscribeMode::unicast);
  auto worst = std::chrono::nanoseconds::zero();
  for (std::uint64_t s = 1; s <= 1000; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    relay.push_frame(make_synthetic_frame("cam", s, 0, 1024));
    worst = std::max(worst, std::chrono::steady_clock::now() - t0);
  }
  EXPECT_LT(worst, 20ms);
  EXPECT_EQ(relay.queued("slow"), 8u);
}
