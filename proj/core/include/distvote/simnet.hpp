#pragma once

// Deterministic discrete-event message-passing simulator.
//
// Every protocol in the library is a set of Node state machines driven by
// deliveries and timers from a single Simulator. Time is an integer tick;
// per-message delays are drawn uniformly from [1, max_delay] with the run's
// seeded generator, so a (scenario, seed) pair fully determines the trace.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "distvote/bytes.hpp"
#include "distvote/rng.hpp"

namespace distvote {

using PeerId = std::uint32_t;
using Tick = std::uint64_t;
using MessageId = std::uint64_t;

enum class Phase : std::uint8_t {
  registration,
  casting,
  aggregation,
  evaluation,
  verification,
};

inline constexpr std::array<Phase, 5> kAllPhases = {
    Phase::registration, Phase::casting, Phase::aggregation,
    Phase::evaluation, Phase::verification};

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

/// Invalid configuration: unknown behavior, malformed fault model, bad
/// protocol parameters. Surfaced by the CLI as exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A protocol broke a simulation rule (e.g. a crashed peer tried to send).
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t { send, deliver, drop, local_action };

std::string_view to_string(EventKind kind);

struct SimEvent {
  Tick time = 0;
  EventKind kind = EventKind::send;
  MessageId message = 0;  // 0 for local actions; not part of the serialized form
  PeerId from = 0;
  std::optional<PeerId> to;
  Phase phase = Phase::casting;
  Digest digest{};
  std::uint64_t size = 0;
};

struct Trace {
  std::vector<SimEvent> events;
  std::uint64_t seed = 0;
  std::string params;

  /// JSON-lines; one event per line with fields
  /// time, kind, from, to, phase, digest, size (in that order).
  std::string to_jsonl() const;

  std::size_t count(EventKind kind) const;
  std::uint64_t sent_bytes() const;
};

struct FaultModel {
  std::set<PeerId> crashed;
  double drop_probability = 0.0;
  // Phases subject to drop_probability; empty means every phase.
  std::set<Phase> drop_phases;
  std::map<PeerId, std::string> byzantine;
  // Message ids (1-based send order) that are lost regardless of phase.
  std::set<MessageId> lost_messages;
  Tick max_delay = 4;

  void validate(std::size_t peer_count) const;
  bool drops(Phase phase) const {
    return drop_probability > 0.0 &&
           (drop_phases.empty() || drop_phases.contains(phase));
  }
};

// How a peer came to hold the role under which it acted. The analysis module
// derives the degree of specialisation from these.
enum class RoleSource : std::uint8_t {
  everyone,       // every voter holds the role
  self_selected,  // any voter may take it up at its own discretion
  seeded_draw,    // a random subset holds it for the rest of the run
  configured,     // fixed by the scenario before the run
};

std::string_view to_string(RoleSource source);

struct RoleAction {
  Tick time = 0;
  PeerId peer = 0;
  Phase phase = Phase::casting;
  RoleSource source = RoleSource::everyone;
  std::string role;
  std::string action;
  // Peers whose unproven claims this action accepted.
  std::vector<PeerId> relies_on;
};

struct RoleLog {
  std::vector<RoleAction> actions;
};

struct Message {
  MessageId id = 0;
  PeerId from = 0;
  PeerId to = 0;
  Phase phase = Phase::casting;
  std::string tag;
  Bytes payload;
  Tick sent_at = 0;
};

struct Outgoing {
  PeerId to = 0;
  Phase phase = Phase::casting;
  std::string tag;
  Bytes payload;
};

class Simulator;

/// A peer's handle into the running simulation.
class Context {
 public:
  PeerId self() const { return self_; }
  Tick now() const;
  std::size_t peer_count() const;
  Rng& rng();

  void send(PeerId to, Phase phase, std::string tag, Bytes payload);
  void set_timer(Tick delay, std::uint64_t tag);
  void act(Phase phase, RoleSource source, std::string_view role,
           std::string_view action, std::span<const std::uint8_t> detail = {},
           std::vector<PeerId> relies_on = {});

 private:
  friend class Simulator;
  Context(Simulator& sim, PeerId self) : sim_(sim), self_(self) {}

  Simulator& sim_;
  PeerId self_;
};

class Node {
 public:
  virtual ~Node() = default;
  virtual void on_start(Context&) {}
  virtual void on_message(Context&, const Message&) {}
  virtual void on_timer(Context&, std::uint64_t /*tag*/) {}
  // Called once for each live peer after the event queue drains. Only local
  // actions are permitted here.
  virtual void on_quiescent(Context&) {}
  virtual bool terminated() const { return false; }
};

struct Behavior {
  // Rewrites each outgoing message into zero or more messages. Empty
  // function means pass-through.
  std::function<std::vector<Outgoing>(PeerId self, Outgoing out, Rng& rng)>
      rewrite;
  // Peer crashes before its (N+1)-th handler invocation.
  std::optional<std::size_t> crash_after_steps;
  // Free-form flag a protocol may read back from its own node logic.
  std::string id;
};

using BehaviorFactory = std::function<Behavior(PeerId peer)>;

/// Named byzantine behaviors. Protocol modules register their own ids
/// ("dpol:invalid-shares", "chain:double-spend", ...); "crash-after-step:N"
/// is built in.
class BehaviorRegistry {
 public:
  void add(std::string id, BehaviorFactory factory);
  bool contains(std::string_view id) const;
  Behavior make(std::string_view id, PeerId peer) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, BehaviorFactory, std::less<>> factories_;
};

struct RunStatus {
  Tick end_tick = 0;
  bool quiescent = false;  // false: max_ticks reached with events pending
  std::size_t pending = 0;
  std::vector<PeerId> terminated;
};

class Simulator {
 public:
  Simulator(std::size_t peer_count, FaultModel faults, std::uint64_t seed,
            BehaviorRegistry registry = {});

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  std::size_t peer_count() const { return nodes_.size(); }
  void set_node(PeerId peer, std::unique_ptr<Node> node);
  Node* node(PeerId peer) { return nodes_.at(peer).get(); }

  void apply_byzantine(PeerId peer, std::string_view behavior_id);
  const std::string* behavior_of(PeerId peer) const;

  /// Sends on behalf of `from` without behavior rewriting.
  MessageId send(PeerId from, PeerId to, Phase phase, std::string tag,
                 Bytes payload);

  RunStatus run_until_quiescent(Tick max_ticks);

  Tick now() const { return now_; }
  bool is_crashed(PeerId peer) const { return crash_tick_.contains(peer); }
  std::optional<Tick> crash_tick(PeerId peer) const;
  const FaultModel& faults() const { return faults_; }

  const Trace& trace() const { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  const RoleLog& roles() const { return roles_; }
  RoleLog take_roles() { return std::move(roles_); }
  void set_params(std::string params) { trace_.params = std::move(params); }

 private:
  friend class Context;

  struct Pending {
    Tick time;
    std::uint64_t seq;
    bool is_timer;
    bool dropped;
    PeerId peer;  // timer owner
    std::uint64_t timer_tag;
    std::shared_ptr<Message> message;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  MessageId enqueue(PeerId from, Outgoing out);
  void send_from_node(PeerId from, Outgoing out);
  void set_timer(PeerId peer, Tick delay, std::uint64_t tag);
  void record_action(PeerId peer, Phase phase, RoleSource source,
                     std::string_view role, std::string_view action,
                     std::span<const std::uint8_t> detail,
                     std::vector<PeerId> relies_on);
  // Counts a handler step; returns false if the peer is (now) crashed.
  bool begin_step(PeerId peer);
  void crash(PeerId peer);

  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<Rng> peer_rngs_;
  std::vector<Behavior> behaviors_;
  std::vector<std::size_t> steps_;
  std::map<PeerId, Tick> crash_tick_;
  FaultModel faults_;
  BehaviorRegistry registry_;
  Rng net_rng_;
  Trace trace_;
  RoleLog roles_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  MessageId next_message_ = 1;
  bool started_ = false;
  bool in_quiescent_ = false;
};

}  // namespace distvote
