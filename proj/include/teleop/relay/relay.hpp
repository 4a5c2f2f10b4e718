#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teleop/clock.hpp"
#include "teleop/types.hpp"
#include "teleop/wire/messages.hpp"

namespace teleop::relay {

struct RelayConfig {
  std::string relay_id = "relay";
  std::size_t max_frame_bytes = 1 << 20;
  std::size_t queue_bound = 64;
  std::int64_t probe_timeout_ms = 2000;
};

struct Subscription {
  std::string client_id;
  std::string source_id;
  SubscribeMode mode = SubscribeMode::unicast;
  std::string group_id;
  bool operator==(const Subscription&) const = default;
};

/// Per (client, source) counters since the subscription started.
/// `sent` counts frames enqueued for the client; once the queue is drained
/// delivered + dropped == sent.
struct DeliveryStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  bool operator==(const DeliveryStats&) const = default;
};

/// Synthetic frame: 8-byte big-endian seq, 8-byte ts, 4-byte size field and
/// a seq-derived byte pattern filling the rest.
Frame make_synthetic_frame(std::string source_id, std::uint64_t frame_seq, std::int64_t ts_ms, std::size_t size);
bool synthetic_frame_intact(const Frame& frame);

/// Fan-out of frame streams to client queues. Each client owns a bounded
/// drop-oldest queue of outgoing envelopes (FRAME and PING); the transport,
/// or a test, pulls from it with pop()/drain(). push_frame only ever takes
/// the relay mutex briefly, so a stalled client never blocks a source.
class Relay {
 public:
  explicit Relay(RelayConfig config = {}, const Clock* clock = nullptr);

  const RelayConfig& config() const { return config_; }

  void register_source(const std::string& source_id, double nominal_rate);
  void unregister_source(const std::string& source_id);
  bool source_flagged(const std::string& source_id) const;
  std::vector<std::string> sources() const;

  void connect_client(const std::string& client_id);
  /// connect_client that accepts an already connected id.
  void attach_client(const std::string& client_id);
  /// Drops the client's subscriptions, queue and pending probes.
  void disconnect_client(const std::string& client_id);

  /// Subscribing again to the same source replaces the earlier mode.
  Subscription subscribe(const std::string& client_id, const std::string& source_id, SubscribeMode mode,
                         const std::string& group_id = {});
  void unsubscribe(const std::string& client_id, const std::string& source_id);
  std::vector<Subscription> subscriptions(const std::string& client_id) const;

  /// Returns the number of client queues the frame was placed in.
  std::size_t push_frame(const Frame& frame);

  std::optional<wire::Envelope> pop(const std::string& client_id, std::chrono::milliseconds wait);
  std::vector<wire::Envelope> drain(const std::string& client_id);
  std::size_t queued(const std::string& client_id) const;

  DeliveryStats stats(const std::string& client_id, const std::string& source_id) const;

  /// Enqueues a PING on the client's frame channel and returns its seq.
  std::uint64_t send_ping(const std::string& client_id);
  /// Completes the probe named by pong.ping_seq. Unknown probes yield none.
  std::optional<LatencySample> on_pong(const std::string& client_id, const wire::PongBody& pong);
  /// Probes older than the timeout become flagged samples with rtt = timeout.
  std::vector<LatencySample> expire_probes();
  /// Blocking probe: sends a PING and waits for on_pong from another thread
  /// or for the timeout.
  LatencySample measure_latency(const std::string& client_id);

 private:
  struct SourceState {
    double nominal_rate = 0.0;
    std::optional<std::uint64_t> last_seq;
    bool flagged = false;
  };
  struct ClientState {
    std::deque<wire::Envelope> queue;
    std::map<std::string, Subscription> subs;  // by source
    std::map<std::string, DeliveryStats> stats;
    std::uint64_t next_seq = 1;
    std::condition_variable cv;
  };

  ClientState& client(const std::string& id);
  const ClientState& client(const std::string& id) const;
  void enqueue(ClientState& c, wire::Envelope env);
  void account_pop(ClientState& c, const wire::Envelope& env);
  std::uint64_t send_ping_locked(const std::string& client_id);

  RelayConfig config_;
  const Clock* clock_;
  SteadyClock steady_;
  mutable std::mutex mu_;
  std::map<std::string, SourceState> sources_;
  std::map<std::string, std::unique_ptr<ClientState>> clients_;
  // group id -> members, shared delivery list for a multicast group
  std::map<std::pair<std::string, std::string>, std::set<std::string>> groups_;
  // keyed by (client, PING envelope seq)
  std::map<std::pair<std::string, std::uint64_t>, std::int64_t> probes_;
  std::condition_variable probe_cv_;
  std::set<std::pair<std::string, std::uint64_t>> waiting_;
  std::map<std::pair<std::string, std::uint64_t>, LatencySample> completed_;
};

}  // namespace teleop::relay
