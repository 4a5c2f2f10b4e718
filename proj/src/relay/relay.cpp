#include "teleop/relay/relay.hpp"

#include <spdlog/spdlog.h>

#include "teleop/error.hpp"

namespace teleop::relay {

namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_be(const std::vector<std::uint8_t>& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | in[at + i];
  return v;
}

std::uint8_t pattern_byte(std::uint64_t seq, std::size_t i) { return static_cast<std::uint8_t>((seq * 31 + i) & 0xff); }

}  // namespace

Frame make_synthetic_frame(std::string source_id, std::uint64_t frame_seq, std::int64_t ts_ms, std::size_t size) {
  if (size < kHeaderBytes) size = kHeaderBytes;
  Frame f;
  f.source_id = std::move(source_id);
  f.frame_seq = frame_seq;
  f.ts_ms = ts_ms;
  f.payload.reserve(size);
  put_be(f.payload, frame_seq, 8);
  put_be(f.payload, static_cast<std::uint64_t>(ts_ms), 8);
  put_be(f.payload, size, 4);
  for (std::size_t i = kHeaderBytes; i < size; ++i) f.payload.push_back(pattern_byte(frame_seq, i));
  return f;
}

bool synthetic_frame_intact(const Frame& f) {
  if (f.payload.size() < kHeaderBytes) return false;
  if (get_be(f.payload, 0, 8) != f.frame_seq) return false;
  if (static_cast<std::int64_t>(get_be(f.payload, 8, 8)) != f.ts_ms) return false;
  if (get_be(f.payload, 16, 4) != f.payload.size()) return false;
  for (std::size_t i = kHeaderBytes; i < f.payload.size(); ++i) {
    if (f.payload[i] != pattern_byte(f.frame_seq, i)) return false;
  }
  return true;
}

Relay::Relay(RelayConfig config, const Clock* clock) : config_(std::move(config)), clock_(clock) {
  if (!clock_) clock_ = &steady_;
  if (config_.queue_bound == 0) throw Error(Errc::validation, "queue bound must be at least 1");
}

void Relay::register_source(const std::string& source_id, double nominal_rate) {
  if (source_id.empty()) throw Error(Errc::validation, "empty source id");
  if (!(nominal_rate >= 0.0)) throw Error(Errc::validation, "nominal rate must be non-negative");
  std::lock_guard lock(mu_);
  if (sources_.count(source_id)) throw Error(Errc::conflict, "source '" + source_id + "' already registered");
  sources_[source_id].nominal_rate = nominal_rate;
}

void Relay::unregister_source(const std::string& source_id) {
  std::lock_guard lock(mu_);
  if (!sources_.erase(source_id)) throw Error(Errc::not_found, "unknown source '" + source_id + "'");
  for (auto& [id, c] : clients_) c->subs.erase(source_id);
  for (auto it = groups_.begin(); it != groups_.end();) {
    it = it->first.first == source_id ? groups_.erase(it) : std::next(it);
  }
}

bool Relay::source_flagged(const std::string& source_id) const {
  std::lock_guard lock(mu_);
  auto it = sources_.find(source_id);
  return it != sources_.end() && it->second.flagged;
}

std::vector<std::string> Relay::sources() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sources_) out.push_back(id);
  return out;
}

Relay::ClientState& Relay::client(const std::string& id) {
  auto it = clients_.find(id);
  if (it == clients_.end()) throw Error(Errc::not_found, "unknown client '" + id + "'");
  return *it->second;
}

const Relay::ClientState& Relay::client(const std::string& id) const {
  auto it = clients_.find(id);
  if (it == clients_.end()) throw Error(Errc::not_found, "unknown client '" + id + "'");
  return *it->second;
}

void Relay::connect_client(const std::string& client_id) {
  std::lock_guard lock(mu_);
  if (clients_.count(client_id)) throw Error(Errc::conflict, "client '" + client_id + "' already connected");
  clients_.emplace(client_id, std::make_unique<ClientState>());
}

void Relay::attach_client(const std::string& client_id) {
  std::lock_guard lock(mu_);
  if (!clients_.count(client_id)) clients_.emplace(client_id, std::make_unique<ClientState>());
}

void Relay::disconnect_client(const std::string& client_id) {
  std::lock_guard lock(mu_);
  auto it = clients_.find(client_id);
  if (it == clients_.end()) return;
  for (auto& [key, members] : groups_) members.erase(client_id);
  for (auto p = probes_.begin(); p != probes_.end();) {
    p = p->first.first == client_id ? probes_.erase(p) : std::next(p);
  }
  it->second->cv.notify_all();
  clients_.erase(it);
}

Subscription Relay::subscribe(const std::string& client_id, const std::string& source_id, SubscribeMode mode,
                              const std::string& group_id) {
  if (mode != SubscribeMode::unicast && mode != SubscribeMode::multicast_group) {
    throw Error(Errc::validation, "subscribe mode must be UNICAST or MULTICAST_GROUP");
  }
  if (mode == SubscribeMode::multicast_group && group_id.empty()) {
    throw Error(Errc::validation, "MULTICAST_GROUP subscription needs a group id");
  }
  std::lock_guard lock(mu_);
  if (!sources_.count(source_id)) throw Error(Errc::not_found, "unknown source '" + source_id + "'");
  ClientState& c = client(client_id);
  if (auto old = c.subs.find(source_id); old != c.subs.end() && old->second.mode == SubscribeMode::multicast_group) {
    groups_[{source_id, old->second.group_id}].erase(client_id);
  }
  Subscription sub{client_id, source_id, mode, mode == SubscribeMode::multicast_group ? group_id : std::string()};
  c.subs[source_id] = sub;
  c.stats[source_id] = DeliveryStats{};
  if (mode == SubscribeMode::multicast_group) groups_[{source_id, group_id}].insert(client_id);
  return sub;
}

void Relay::unsubscribe(const std::string& client_id, const std::string& source_id) {
  std::lock_guard lock(mu_);
  ClientState& c = client(client_id);
  auto it = c.subs.find(source_id);
  if (it == c.subs.end())
    throw Error(Errc::not_found, "client '" + client_id + "' is not subscribed to '" + source_id + "'");
  if (it->second.mode == SubscribeMode::multicast_group) groups_[{source_id, it->second.group_id}].erase(client_id);
  c.subs.erase(it);
  // Frames already queued for this source are withdrawn so nothing arrives
  // after the unsubscribe returns.
  auto& stats = c.stats[source_id];
  for (auto q = c.queue.begin(); q != c.queue.end();) {
    if (q->msg_type == wire::MsgType::frame && q->as<Frame>().source_id == source_id) {
      ++stats.dropped;
      q = c.queue.erase(q);
    } else {
      ++q;
    }
  }
}

std::vector<Subscription> Relay::subscriptions(const std::string& client_id) const {
  std::lock_guard lock(mu_);
  std::vector<Subscription> out;
  for (const auto& [source, sub] : client(client_id).subs) out.push_back(sub);
  return out;
}

void Relay::enqueue(ClientState& c, wire::Envelope env) {
  if (c.queue.size() >= config_.queue_bound) {
    auto victim = c.queue.begin();
    for (auto it = c.queue.begin(); it != c.queue.end(); ++it) {
      if (it->msg_type == wire::MsgType::frame) {
        victim = it;
        break;
      }
    }
    if (victim->msg_type == wire::MsgType::frame) ++c.stats[victim->as<Frame>().source_id].dropped;
    c.queue.erase(victim);
  }
  c.queue.push_back(std::move(env));
  c.cv.notify_one();
}

std::size_t Relay::push_frame(const Frame& frame) {
  if (frame.payload.size() > config_.max_frame_bytes) {
    throw Error(Errc::size, "frame of " + std::to_string(frame.payload.size()) + " bytes exceeds the " +
                                std::to_string(config_.max_frame_bytes) + " byte limit");
  }
  std::lock_guard lock(mu_);
  auto src = sources_.find(frame.source_id);
  if (src == sources_.end()) {
    spdlog::warn("relay: frame from unregistered source '{}' dropped", frame.source_id);
    throw Error(Errc::protocol, "frame from unregistered source '" + frame.source_id + "'");
  }
  SourceState& s = src->second;
  if (s.last_seq && frame.frame_seq != *s.last_seq + 1) {
    s.flagged = true;
    spdlog::warn("relay: source '{}' sent frame_seq {} after {}", frame.source_id, frame.frame_seq, *s.last_seq);
    throw Error(Errc::protocol, "source '" + frame.source_id + "' sent frame_seq " + std::to_string(frame.frame_seq) +
                                    " after " + std::to_string(*s.last_seq));
  }
  s.last_seq = frame.frame_seq;

  std::size_t delivered = 0;
  auto deliver = [&](const std::string& client_id) {
    ClientState& c = *clients_.at(client_id);
    ++c.stats[frame.source_id].sent;
    enqueue(c, wire::make_envelope(config_.relay_id, c.next_seq++, clock_->now_ms(), frame));
    ++delivered;
  };
  for (auto& [id, c] : clients_) {
    auto it = c->subs.find(frame.source_id);
    if (it != c->subs.end() && it->second.mode == SubscribeMode::unicast) deliver(id);
  }
  for (auto g = groups_.lower_bound({frame.source_id, std::string()});
       g != groups_.end() && g->first.first == frame.source_id; ++g) {
    for (const auto& member : g->second) deliver(member);
  }
  return delivered;
}

void Relay::account_pop(ClientState& c, const wire::Envelope& env) {
  if (env.msg_type == wire::MsgType::frame) ++c.stats[env.as<Frame>().source_id].delivered;
}

std::optional<wire::Envelope> Relay::pop(const std::string& client_id, std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  auto it = clients_.find(client_id);
  if (it == clients_.end()) throw Error(Errc::not_found, "unknown client '" + client_id + "'");
  ClientState* c = it->second.get();
  const auto deadline = std::chrono::steady_clock::now() + wait;
  while (c->queue.empty()) {
    if (c->cv.wait_until(lock, deadline) == std::cv_status::timeout) break;
    it = clients_.find(client_id);
    if (it == clients_.end() || it->second.get() != c) return std::nullopt;
  }
  if (c->queue.empty()) return std::nullopt;
  wire::Envelope env = std::move(c->queue.front());
  c->queue.pop_front();
  account_pop(*c, env);
  return env;
}

std::vector<wire::Envelope> Relay::drain(const std::string& client_id) {
  std::lock_guard lock(mu_);
  ClientState& c = client(client_id);
  std::vector<wire::Envelope> out(std::make_move_iterator(c.queue.begin()), std::make_move_iterator(c.queue.end()));
  c.queue.clear();
  for (const auto& env : out) account_pop(c, env);
  return out;
}

std::size_t Relay::queued(const std::string& client_id) const {
  std::lock_guard lock(mu_);
  return client(client_id).queue.size();
}

DeliveryStats Relay::stats(const std::string& client_id, const std::string& source_id) const {
  std::lock_guard lock(mu_);
  const ClientState& c = client(client_id);
  auto it = c.stats.find(source_id);
  return it == c.stats.end() ? DeliveryStats{} : it->second;
}

std::uint64_t Relay::send_ping(const std::string& client_id) {
  std::lock_guard lock(mu_);
  return send_ping_locked(client_id);
}

std::uint64_t Relay::send_ping_locked(const std::string& client_id) {
  ClientState& c = client(client_id);
  const std::uint64_t seq = c.next_seq++;
  const std::int64_t now = clock_->now_ms();
  probes_[{client_id, seq}] = now;
  enqueue(c, wire::make_envelope(config_.relay_id, seq, now, wire::PingBody{}));
  return seq;
}

std::optional<LatencySample> Relay::on_pong(const std::string& client_id, const wire::PongBody& pong) {
  std::lock_guard lock(mu_);
  auto it = probes_.find({client_id, pong.ping_seq});
  if (it == probes_.end()) return std::nullopt;
  const std::int64_t now = clock_->now_ms();
  LatencySample sample{client_id, static_cast<double>(now - it->second), now, false};
  if (waiting_.count(it->first)) completed_[it->first] = sample;
  probes_.erase(it);
  probe_cv_.notify_all();
  return sample;
}

std::vector<LatencySample> Relay::expire_probes() {
  std::lock_guard lock(mu_);
  const std::int64_t now = clock_->now_ms();
  std::vector<LatencySample> out;
  for (auto it = probes_.begin(); it != probes_.end();) {
    if (now - it->second >= config_.probe_timeout_ms) {
      out.push_back({it->first.first, static_cast<double>(config_.probe_timeout_ms), now, true});
      it = probes_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

LatencySample Relay::measure_latency(const std::string& client_id) {
  std::unique_lock lock(mu_);
  const std::pair<std::string, std::uint64_t> key{client_id, send_ping_locked(client_id)};
  waiting_.insert(key);
  const bool done = probe_cv_.wait_for(lock, std::chrono::milliseconds(config_.probe_timeout_ms),
                                       [&] { return completed_.count(key) > 0; });
  waiting_.erase(key);
  if (done) {
    LatencySample s = completed_.at(key);
    completed_.erase(key);
    return s;
  }
  probes_.erase(key);
  return {client_id, static_cast<double>(config_.probe_timeout_ms), clock_->now_ms(), true};
}

}  // namespace teleop::relay
