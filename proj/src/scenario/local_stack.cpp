#include "teleop/scenario/local_stack.hpp"

#include "teleop/error.hpp"
#include "teleop/runtime/modules.hpp"
#include "teleop/session/scene.hpp"

namespace teleop::scenario {

LocalStack::LocalStack(StackConfig config) : config_(std::move(config)), downstream_(config_.latency) {
  if (config_.tick_ms <= 0) throw Error(Errc::validation, "tick must be positive");
  if (config_.probe_ms <= 0 || config_.probe_ms % config_.tick_ms != 0) {
    throw Error(Errc::validation, "probe period must be a positive multiple of the tick");
  }
  if (config_.controller.control_period_ms % config_.tick_ms != 0) {
    throw Error(Errc::validation, "control period must be a multiple of the tick");
  }
  if (config_.cameras < 0) throw Error(Errc::validation, "negative camera count");
  config_.robot.tick_s = static_cast<double>(config_.tick_ms) / 1000.0;

  robot_ = std::make_unique<robot::RobotServer>(config_.robot, clock_);
  link_ = std::make_shared<session::LocalRobotLink>(*robot_);
  WorldSnapshot scene = config_.scene.objects.empty() ? session::default_scene() : config_.scene;
  session::SessionConfig scfg;
  scfg.limits = config_.robot.limits;
  server_ = std::make_unique<session::SessionServer>(session::startup_world(scene), clock_, scfg);
  server_->set_robot_link(link_);
  robot_->add_listener([this](const wire::RobotStateBody& e) { server_->on_robot_event(e); });

  relay_ = std::make_unique<relay::Relay>(config_.relay, &clock_);
  for (int i = 1; i <= config_.cameras; ++i) {
    sources_.push_back("cam" + std::to_string(i));
    relay_->register_source(sources_.back(), config_.camera_rate_hz);
    next_frame_seq_.push_back(1);
  }

  runtime::ModuleEnvironment env;
  env.relay = relay_.get();
  env.camera_client = config_.view_client;
  env.camera_sources = sources_;
  env.set_trajectory_support = [this](bool on) { robot_->set_trajectory_support(on); };
  core_ = std::make_unique<runtime::Core>(config_.controller, clock_, runtime::standard_factory(env));
}

LocalStack::~LocalStack() = default;

std::vector<std::string> LocalStack::camera_sources() const { return sources_; }

void LocalStack::feed_sample(const LatencySample& s) {
  samples_.push_back(s);
  core_->observe_latency(s);
  estimate_trace_.emplace_back(s.ts_ms, *core_->latency_estimate());
}

void LocalStack::tick() {
  const std::int64_t t = clock_.now_ms();

  if (config_.camera_rate_hz > 0.0) {
    const double period_ms = 1000.0 / config_.camera_rate_hz;
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      while (static_cast<double>(next_frame_seq_[i] - 1) * period_ms <= static_cast<double>(t)) {
        relay_->push_frame(relay::make_synthetic_frame(sources_[i], next_frame_seq_[i], t, config_.frame_bytes));
        ++next_frame_seq_[i];
      }
    }
  }

  bool view_connected = true;
  try {
    if (t % config_.probe_ms == 0) relay_->send_ping(config_.view_client);
    for (auto& env : relay_->drain(config_.view_client)) downstream_.push(t, std::move(env));
  } catch (const Error& e) {
    if (e.code() != Errc::not_found) throw;
    view_connected = false;
  }
  for (auto& env : downstream_.release(t)) {
    if (env.msg_type == wire::MsgType::frame) {
      const Frame& f = env.as<Frame>();
      view_frames_[f.source_id].push_back(f.frame_seq);
    } else if (env.msg_type == wire::MsgType::ping && view_connected) {
      if (auto s = relay_->on_pong(config_.view_client, wire::PongBody{env.seq})) feed_sample(*s);
    }
  }
  for (const auto& s : relay_->expire_probes()) feed_sample(s);

  if (t > 0 && t % config_.controller.control_period_ms == 0) core_->control_tick();

  robot_->tick(static_cast<double>(config_.tick_ms) / 1000.0);
  clock_.advance(config_.tick_ms);
}

void LocalStack::run_until(std::int64_t t_ms) {
  while (clock_.now_ms() <= t_ms) tick();
}

ScriptedClient& LocalStack::add_client(const std::string& user_id, Platform platform) {
  if (clients_.count(user_id)) throw Error(Errc::duplicate, "client '" + user_id + "' already exists");
  auto client = std::make_unique<ScriptedClient>(user_id, platform);
  auto transport = std::make_unique<LocalTransport>(*server_, *client, clock_, config_.wire_roundtrip);
  ScriptedClient& ref = *client;
  clients_[user_id] = std::move(client);
  transports_[user_id] = std::move(transport);
  return ref;
}

ScriptedClient& LocalStack::client(const std::string& user_id) {
  auto it = clients_.find(user_id);
  if (it == clients_.end()) throw Error(Errc::not_found, "no client '" + user_id + "'");
  return *it->second;
}

LocalTransport& LocalStack::transport(const std::string& user_id) {
  auto it = transports_.find(user_id);
  if (it == transports_.end()) throw Error(Errc::not_found, "no client '" + user_id + "'");
  return *it->second;
}

std::vector<std::string> LocalStack::client_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, c] : clients_) out.push_back(id);
  return out;
}

}  // namespace teleop::scenario
