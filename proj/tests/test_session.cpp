#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "teleop/error.hpp"
#include "teleop/robot/robot_server.hpp"
#include "teleop/session/replica.hpp"
#include "teleop/session/scene.hpp"
#include "teleop/session/session_server.hpp"
#include "teleop/session/world_store.hpp"

using namespace teleop;
using namespace teleop::session;

namespace {

class SessionTest : public ::testing::Test {
 protected:
  SessionTest() : robot_(robot::RobotConfig{}, clock_), server_(default_scene(), clock_) {
    link_ = std::make_shared<LocalRobotLink>(robot_);
    server_.set_robot_link(link_);
    robot_.add_listener([this](const wire::RobotStateBody& e) { server_.on_robot_event(e); });
  }

  std::string join(const std::string& user) {
    auto& box = inbox_[user];
    return server_.join_session(user, Platform::web, [&box](const wire::Envelope& m) { box.push_back(m); }).session_id;
  }

  std::vector<wire::Envelope> of_type(const std::string& user, wire::MsgType t) {
    std::vector<wire::Envelope> out;
    for (const auto& m : inbox_[user])
      if (m.msg_type == t) out.push_back(m);
    return out;
  }

  void run_robot(int ticks) {
    for (int i = 0; i < ticks; ++i) robot_.tick(0.01);
  }

  ManualClock clock_;
  robot::RobotServer robot_;
  std::shared_ptr<LocalRobotLink> link_;
  SessionServer server_;
  std::map<std::string, std::vector<wire::Envelope>> inbox_;
};

JointConfig joint0(double v) {
  JointConfig q = JointConfig::Zero();
  q(0) = v;
  return q;
}

}  // namespace

TEST_F(SessionTest, FirstJoinSeesSceneAndOwnPhantom) {
  join("alice");
  const auto snaps = of_type("alice", wire::MsgType::snapshot);
  ASSERT_EQ(snaps.size(), 1u);
  const auto& s = snaps[0].as<wire::SnapshotBody>();
  EXPECT_TRUE(s.full);
  EXPECT_EQ(s.snapshot.objects.size(), 4u);
  EXPECT_NE(s.snapshot.find("phantom:alice"), nullptr);
  ASSERT_EQ(s.snapshot.connected_users.size(), 1u);
}

TEST_F(SessionTest, SecondJoinNotifiesFirstBeforeUpdates) {
  join("alice");
  const auto bob = join("bob");
  server_.update_phantom(bob, joint0(0.3));
  const auto& box = inbox_["alice"];
  ASSERT_GE(box.size(), 4u);
  EXPECT_EQ(box[1].msg_type, wire::MsgType::join);
  EXPECT_EQ(box[1].as<wire::JoinBody>().user_id, "bob");
  EXPECT_EQ(box[2].msg_type, wire::MsgType::phantom_update);
  EXPECT_EQ(box[3].as<wire::PhantomUpdateBody>().q, joint0(0.3));
  EXPECT_EQ(of_type("bob", wire::MsgType::snapshot)[0].as<wire::SnapshotBody>().snapshot.objects.size(), 5u);
}

TEST_F(SessionTest, DuplicateUserRejected) {
  const auto s = join("alice");
  try {
    join("alice");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate);
  }
  EXPECT_NO_THROW(server_.update_phantom(s, joint0(0.1)));
}

TEST_F(SessionTest, SameValueUpdateStillIncrements) {
  const auto s = join("alice");
  const auto a = server_.update_phantom(s, joint0(0.1));
  const auto b = server_.update_phantom(s, joint0(0.1));
  EXPECT_EQ(b, a + 1);
}

TEST_F(SessionTest, ThousandUpdatesArriveInOrder) {
  const auto a = join("alice");
  join("bob");
  for (int i = 0; i < 1000; ++i) server_.update_phantom(a, joint0(i * 1e-3));
  const auto got = of_type("bob", wire::MsgType::phantom_update);
  ASSERT_EQ(got.size(), 1000u);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(got[i].as<wire::PhantomUpdateBody>().q(0), i * 1e-3);
}

TEST_F(SessionTest, LimitErrorNamesJoint) {
  const auto s = join("alice");
  JointConfig q = JointConfig::Zero();
  q(4) = 3.5;
  try {
    server_.update_phantom(s, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::limit);
    EXPECT_NE(std::string(e.what()).find("joint 5 "), std::string::npos) << e.what();
  }
}

TEST_F(SessionTest, LockRules) {
  const auto a = join("alice");
  const auto b = join("bob");
  EXPECT_TRUE(server_.acquire_lock(a, "block_a").granted);
  EXPECT_TRUE(server_.acquire_lock(a, "block_a").granted);  // reentrant
  const LockResult deny = server_.acquire_lock(b, "block_a");
  EXPECT_FALSE(deny.granted);
  EXPECT_EQ(deny.owner, "alice");
  EXPECT_EQ(of_type("bob", wire::MsgType::lock_deny).size(), 1u);
  EXPECT_TRUE(of_type("alice", wire::MsgType::lock_deny).empty());

  const auto before = server_.snapshot();
  EXPECT_THROW(server_.release_lock(b, "block_a"), Error);
  EXPECT_EQ(server_.snapshot(), before);
  server_.release_lock(a, "block_a");
  EXPECT_TRUE(server_.acquire_lock(b, "block_a").granted);
}

TEST_F(SessionTest, DisconnectReleasesAndRemoves) {
  const auto a = join("alice");
  join("bob");
  server_.acquire_lock(a, "block_b");
  server_.disconnect(a);
  const auto s = server_.snapshot();
  EXPECT_EQ(s.find("phantom:alice"), nullptr);
  EXPECT_FALSE(s.find("block_b")->owner.has_value());
  const auto& last = inbox_["bob"].back().as<wire::SnapshotBody>();
  EXPECT_FALSE(last.full);
  EXPECT_EQ(last.removed, std::vector<std::string>{"phantom:alice"});
  EXPECT_THROW(server_.update_phantom(a, joint0(0.1)), Error);
}

TEST_F(SessionTest, ValidateSendsPhantomToRobot) {
  const auto a = join("alice");
  JointConfig q;
  q << 0.1, -0.2, 0.3, -0.4, 0.5, -0.6;
  server_.update_phantom(a, q);
  const auto receipt = server_.validate_phantom(a);
  EXPECT_EQ(receipt.status, RobotEventKind::accepted);
  const auto log = robot_.command_log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].waypoints, std::vector<JointConfig>{q});
  EXPECT_EQ(server_.validate_phantom(a).status, RobotEventKind::busy);
  run_robot(300);
  EXPECT_LT((robot_.state().q - q).norm(), 1e-6);
}

TEST_F(SessionTest, ZeroDisplacementValidateCompletes) {
  const auto a = join("alice");
  EXPECT_EQ(server_.validate_phantom(a).status, RobotEventKind::accepted);
  run_robot(1);
  ASSERT_EQ(robot_.command_log().size(), 1u);
  EXPECT_TRUE(robot_.command_log()[0].completed);
}

TEST_F(SessionTest, UnreachableRobotIsDeliveryError) {
  const auto a = join("alice");
  link_->set_reachable(false);
  try {
    server_.validate_phantom(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::delivery);
  }
  EXPECT_TRUE(robot_.command_log().empty());
}

TEST_F(SessionTest, HandleChecksSequenceAndAnswersPing) {
  const auto a = join("alice");
  server_.handle(a, wire::make_envelope("alice", 5, 0, wire::PingBody{}));
  ASSERT_EQ(of_type("alice", wire::MsgType::pong).size(), 1u);
  EXPECT_EQ(of_type("alice", wire::MsgType::pong)[0].as<wire::PongBody>().ping_seq, 5u);
  EXPECT_THROW(server_.handle(a, wire::make_envelope("alice", 5, 0, wire::PingBody{})), Error);
  server_.handle(a, wire::make_envelope("alice", 6, 0, wire::PhantomUpdateBody{"phantom:bob", joint0(0.1), 0}));
  ASSERT_EQ(of_type("alice", wire::MsgType::error).size(), 1u);
  EXPECT_EQ(of_type("alice", wire::MsgType::error)[0].as<wire::ErrorBody>().code, "ownership");
}

TEST_F(SessionTest, ReplicasConvergeAndStayOrdered) {
  std::vector<std::string> users = {"u1", "u2", "u3", "u4"};
  std::vector<std::string> ids;
  for (const auto& u : users) ids.push_back(join(u));
  for (int i = 0; i < 200; ++i) {
    const auto& s = ids[i % 4];
    server_.update_phantom(s, joint0(i * 1e-3));
    if (i % 17 == 0) server_.acquire_lock(s, "block_c");
    if (i % 17 == 5) {
      try {
        server_.release_lock(s, "block_c");
      } catch (const Error&) {
      }
    }
  }
  server_.disconnect(ids[3]);
  for (int k = 0; k < 3; ++k) {
    WorldReplica replica;
    for (const auto& m : inbox_[users[k]]) replica.apply(m);
    EXPECT_EQ(replica.snapshot(), server_.snapshot());
    EXPECT_TRUE(replica.per_object_ordered());
    EXPECT_TRUE(replica.gap_free());
  }
}

TEST(WorldStore, PersistRestoreIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "teleop_store_roundtrip.db";
  std::filesystem::remove(path);
  ManualClock clock;
  SessionServer server(default_scene(), clock);
  const auto s = server.join_session("alice", Platform::vr, [](const wire::Envelope&) {}).session_id;
  server.acquire_lock(s, "block_a");
  server.update_phantom(s, joint0(0.25));
  FileWorldStore store(path);
  server.persist_world(store);

  FileWorldStore reopened(path);
  const WorldSnapshot restored = restore_world(reopened, default_scene());
  EXPECT_EQ(restored, server.snapshot());
  EXPECT_EQ(canonical_text(restored), canonical_text(server.snapshot()));
  std::filesystem::remove(path);
}

TEST(WorldStore, EmptyStoreGivesInitialScene) {
  const auto path = std::filesystem::temp_directory_path() / "teleop_store_missing.db";
  std::filesystem::remove(path);
  FileWorldStore store(path);
  EXPECT_EQ(restore_world(store, default_scene()), default_scene());
}

TEST(WorldStore, TruncationIsRefusedAtEveryCut) {
  const auto path = std::filesystem::temp_directory_path() / "teleop_store_trunc.db";
  ManualClock clock;
  SessionServer server(default_scene(), clock);
  server.join_session("alice", Platform::web, [](const wire::Envelope&) {});
  FileWorldStore(path).save(server.snapshot());
  std::ifstream in(path, std::ios::binary);
  const std::string full((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  int refused = 0;
  for (std::size_t cut = 1; cut + 1 < full.size(); cut += 7) {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << full.substr(0, cut);
    FileWorldStore store(path);
    try {
      restore_world(store, default_scene());
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::store);
      ++refused;
      continue;
    }
    ADD_FAILURE() << "cut at " << cut << " accepted";
  }
  EXPECT_GT(refused, 10);
  std::filesystem::remove(path);
}

TEST(WorldStore, StartupWorldDropsSessionState) {
  WorldSnapshot s = default_scene();
  s.world_seq = 9;
  s.objects[0].owner = "alice";
  ShareableObject phantom;
  phantom.object_id = "phantom:alice";
  phantom.kind = ObjectKind::phantom_robot;
  phantom.state = JointConfig::Zero();
  s.objects.push_back(phantom);
  s.connected_users.push_back({"alice", Platform::web});
  const WorldSnapshot w = startup_world(s);
  EXPECT_EQ(w.world_seq, 9u);
  EXPECT_EQ(w.objects.size(), 3u);
  EXPECT_FALSE(w.objects[0].owner.has_value());
  EXPECT_TRUE(w.connected_users.empty());
}
