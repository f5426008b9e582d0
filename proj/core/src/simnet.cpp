#include "distvote/simnet.hpp"

#include <charconv>
#include <sstream>

namespace distvote {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::registration: return "registration";
    case Phase::casting: return "casting";
    case Phase::aggregation: return "aggregation";
    case Phase::evaluation: return "evaluation";
    case Phase::verification: return "verification";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (auto p : kAllPhases) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::send: return "send";
    case EventKind::deliver: return "deliver";
    case EventKind::drop: return "drop";
    case EventKind::local_action: return "local-action";
  }
  return "?";
}

std::string_view to_string(RoleSource source) {
  switch (source) {
    case RoleSource::everyone: return "everyone";
    case RoleSource::self_selected: return "self-selected";
    case RoleSource::seeded_draw: return "seeded-draw";
    case RoleSource::configured: return "configured";
  }
  return "?";
}

std::string Trace::to_jsonl() const {
  std::string out;
  out.reserve(events.size() * 140);
  for (const auto& e : events) {
    out += "{\"time\":";
    out += std::to_string(e.time);
    out += ",\"kind\":\"";
    out += to_string(e.kind);
    out += "\",\"from\":";
    out += std::to_string(e.from);
    out += ",\"to\":";
    out += e.to ? std::to_string(*e.to) : "null";
    out += ",\"phase\":\"";
    out += to_string(e.phase);
    out += "\",\"digest\":\"";
    out += to_hex(e.digest);
    out += "\",\"size\":";
    out += std::to_string(e.size);
    out += "}\n";
  }
  return out;
}

std::size_t Trace::count(EventKind kind) const {
  std::size_t n = 0;
  for (const auto& e : events) n += e.kind == kind;
  return n;
}

std::uint64_t Trace::sent_bytes() const {
  std::uint64_t n = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::send) n += e.size;
  }
  return n;
}

void FaultModel::validate(std::size_t peer_count) const {
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw ConfigError("drop_probability must lie in [0, 1]");
  }
  if (max_delay < 1) throw ConfigError("max_delay must be >= 1");
  for (auto p : crashed) {
    if (p >= peer_count) {
      throw ConfigError("crashed peer " + std::to_string(p) + " out of range");
    }
  }
  for (const auto& [p, id] : byzantine) {
    if (p >= peer_count) {
      throw ConfigError("byzantine peer " + std::to_string(p) +
                        " out of range");
    }
    if (crashed.contains(p) && !id.starts_with("crash-after-step")) {
      throw ConfigError("peer " + std::to_string(p) +
                        " is both crashed and byzantine (" + id + ")");
    }
  }
}

namespace {

std::optional<std::size_t> parse_crash_after(std::string_view id) {
  constexpr std::string_view prefix = "crash-after-step";
  if (!id.starts_with(prefix)) return std::nullopt;
  id.remove_prefix(prefix.size());
  if (id.empty() || (id.front() != ':' && id.front() != ' ')) {
    return std::nullopt;
  }
  id.remove_prefix(1);
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), n);
  if (ec != std::errc{} || ptr != id.data() + id.size()) return std::nullopt;
  return n;
}

}  // namespace

void BehaviorRegistry::add(std::string id, BehaviorFactory factory) {
  factories_[std::move(id)] = std::move(factory);
}

bool BehaviorRegistry::contains(std::string_view id) const {
  return parse_crash_after(id).has_value() || factories_.contains(id);
}

Behavior BehaviorRegistry::make(std::string_view id, PeerId peer) const {
  if (auto steps = parse_crash_after(id)) {
    Behavior b;
    b.crash_after_steps = *steps;
    b.id = std::string(id);
    return b;
  }
  auto it = factories_.find(id);
  if (it == factories_.end()) {
    throw ConfigError("unknown byzantine behavior '" + std::string(id) + "'");
  }
  Behavior b = it->second(peer);
  // A factory may decline a peer (e.g. a root-only behavior on a leaf); the
  // peer then stays honest.
  if (!b.rewrite && !b.crash_after_steps && b.id.empty()) return b;
  b.id = std::string(id);
  return b;
}

std::vector<std::string> BehaviorRegistry::ids() const {
  std::vector<std::string> out{"crash-after-step:<N>"};
  for (const auto& [id, _] : factories_) out.push_back(id);
  return out;
}

Tick Context::now() const { return sim_.now_; }
std::size_t Context::peer_count() const { return sim_.peer_count(); }
Rng& Context::rng() { return sim_.peer_rngs_[self_]; }

void Context::send(PeerId to, Phase phase, std::string tag, Bytes payload) {
  if (sim_.in_quiescent_) {
    throw ScenarioError("send during quiescence hook");
  }
  sim_.send_from_node(self_, Outgoing{to, phase, std::move(tag),
                                      std::move(payload)});
}

void Context::set_timer(Tick delay, std::uint64_t tag) {
  if (sim_.in_quiescent_) {
    throw ScenarioError("timer during quiescence hook");
  }
  sim_.set_timer(self_, delay, tag);
}

void Context::act(Phase phase, RoleSource source, std::string_view role,
                  std::string_view action,
                  std::span<const std::uint8_t> detail,
                  std::vector<PeerId> relies_on) {
  sim_.record_action(self_, phase, source, role, action, detail,
                     std::move(relies_on));
}

Simulator::Simulator(std::size_t peer_count, FaultModel faults,
                     std::uint64_t seed, BehaviorRegistry registry)
    : nodes_(peer_count),
      behaviors_(peer_count),
      steps_(peer_count, 0),
      faults_(std::move(faults)),
      registry_(std::move(registry)),
      net_rng_(Rng::derive(seed, 0)) {
  faults_.validate(peer_count);
  trace_.seed = seed;
  peer_rngs_.reserve(peer_count);
  for (std::size_t i = 0; i < peer_count; ++i) {
    peer_rngs_.push_back(Rng::derive(seed, i + 1));
  }
  for (auto p : faults_.crashed) crash_tick_[p] = 0;
  for (const auto& [p, id] : faults_.byzantine) apply_byzantine(p, id);
}

void Simulator::set_node(PeerId peer, std::unique_ptr<Node> node) {
  nodes_.at(peer) = std::move(node);
}

void Simulator::apply_byzantine(PeerId peer, std::string_view behavior_id) {
  if (peer >= nodes_.size()) {
    throw ConfigError("byzantine peer out of range");
  }
  behaviors_[peer] = registry_.make(behavior_id, peer);
}

const std::string* Simulator::behavior_of(PeerId peer) const {
  const auto& b = behaviors_.at(peer);
  return b.id.empty() ? nullptr : &b.id;
}

std::optional<Tick> Simulator::crash_tick(PeerId peer) const {
  auto it = crash_tick_.find(peer);
  if (it == crash_tick_.end()) return std::nullopt;
  return it->second;
}

MessageId Simulator::send(PeerId from, PeerId to, Phase phase, std::string tag,
                          Bytes payload) {
  return enqueue(from, Outgoing{to, phase, std::move(tag), std::move(payload)});
}

void Simulator::send_from_node(PeerId from, Outgoing out) {
  const auto& behavior = behaviors_[from];
  if (!behavior.rewrite) {
    enqueue(from, std::move(out));
    return;
  }
  for (auto& o : behavior.rewrite(from, std::move(out), peer_rngs_[from])) {
    enqueue(from, std::move(o));
  }
}

MessageId Simulator::enqueue(PeerId from, Outgoing out) {
  if (from >= nodes_.size() || out.to >= nodes_.size()) {
    throw ScenarioError("send: peer id out of range");
  }
  if (is_crashed(from)) {
    throw ScenarioError("send from crashed peer " + std::to_string(from));
  }
  auto msg = std::make_shared<Message>();
  msg->id = next_message_++;
  msg->from = from;
  msg->to = out.to;
  msg->phase = out.phase;
  msg->tag = std::move(out.tag);
  msg->payload = std::move(out.payload);
  msg->sent_at = now_;

  SimEvent ev;
  ev.time = now_;
  ev.kind = EventKind::send;
  ev.message = msg->id;
  ev.from = from;
  ev.to = msg->to;
  ev.phase = msg->phase;
  ev.digest = sha256(msg->payload);
  ev.size = msg->payload.size();
  trace_.events.push_back(ev);

  // Always draw both values so the stream does not depend on fault settings
  // of earlier messages.
  Tick delay = static_cast<Tick>(
      net_rng_.between(1, static_cast<std::int64_t>(faults_.max_delay)));
  double u = net_rng_.unit();
  bool dropped = (faults_.drops(msg->phase) &&
                  (faults_.drop_probability >= 1.0 ||
                   u < faults_.drop_probability)) ||
                 faults_.lost_messages.contains(msg->id);

  queue_.push(Pending{now_ + delay, seq_++, false, dropped, 0, 0, msg});
  return msg->id;
}

void Simulator::set_timer(PeerId peer, Tick delay, std::uint64_t tag) {
  queue_.push(Pending{now_ + std::max<Tick>(delay, 1), seq_++, true, false,
                      peer, tag, nullptr});
}

void Simulator::record_action(PeerId peer, Phase phase, RoleSource source,
                              std::string_view role, std::string_view action,
                              std::span<const std::uint8_t> detail,
                              std::vector<PeerId> relies_on) {
  if (is_crashed(peer)) {
    throw ScenarioError("local action by crashed peer " +
                        std::to_string(peer));
  }
  ByteWriter w;
  w.field(role).field(action).field(detail);
  SimEvent ev;
  ev.time = now_;
  ev.kind = EventKind::local_action;
  ev.from = peer;
  ev.phase = phase;
  ev.digest = sha256(w.bytes());
  ev.size = w.bytes().size();
  trace_.events.push_back(ev);
  roles_.actions.push_back(RoleAction{now_, peer, phase, source,
                                      std::string(role), std::string(action),
                                      std::move(relies_on)});
}

void Simulator::crash(PeerId peer) { crash_tick_.emplace(peer, now_); }

bool Simulator::begin_step(PeerId peer) {
  if (is_crashed(peer) || !nodes_[peer]) return false;
  const auto& limit = behaviors_[peer].crash_after_steps;
  if (limit && steps_[peer] >= *limit) {
    crash(peer);
    return false;
  }
  ++steps_[peer];
  return true;
}

RunStatus Simulator::run_until_quiescent(Tick max_ticks) {
  if (!started_) {
    started_ = true;
    for (PeerId p = 0; p < nodes_.size(); ++p) {
      if (!begin_step(p)) continue;
      Context ctx(*this, p);
      nodes_[p]->on_start(ctx);
    }
  }

  RunStatus status;
  while (!queue_.empty()) {
    if (queue_.top().time > max_ticks) break;
    Pending ev = queue_.top();
    queue_.pop();
    now_ = ev.time;

    if (ev.is_timer) {
      if (!begin_step(ev.peer)) continue;
      Context ctx(*this, ev.peer);
      nodes_[ev.peer]->on_timer(ctx, ev.timer_tag);
      continue;
    }

    const Message& msg = *ev.message;
    SimEvent rec;
    rec.time = now_;
    rec.message = msg.id;
    rec.from = msg.from;
    rec.to = msg.to;
    rec.phase = msg.phase;
    rec.digest = sha256(msg.payload);
    rec.size = msg.payload.size();

    // Messages to a dead receiver are lost, never delivered.
    bool deliverable = !ev.dropped && !is_crashed(msg.to) && nodes_[msg.to];
    if (deliverable && behaviors_[msg.to].crash_after_steps &&
        steps_[msg.to] >= *behaviors_[msg.to].crash_after_steps) {
      crash(msg.to);
      deliverable = false;
    }
    rec.kind = deliverable ? EventKind::deliver : EventKind::drop;
    trace_.events.push_back(rec);
    if (!deliverable) continue;

    begin_step(msg.to);
    Context ctx(*this, msg.to);
    nodes_[msg.to]->on_message(ctx, msg);
  }

  status.pending = queue_.size();
  status.quiescent = queue_.empty();
  status.end_tick = now_;
  if (status.quiescent) {
    in_quiescent_ = true;
    for (PeerId p = 0; p < nodes_.size(); ++p) {
      if (is_crashed(p) || !nodes_[p]) continue;
      Context ctx(*this, p);
      nodes_[p]->on_quiescent(ctx);
    }
    in_quiescent_ = false;
  }
  for (PeerId p = 0; p < nodes_.size(); ++p) {
    if (nodes_[p] && !is_crashed(p) && nodes_[p]->terminated()) {
      status.terminated.push_back(p);
    }
  }
  return status;
}

}  // namespace distvote
