#include "distvote/dpol.hpp"

#include <algorithm>
#include <memory>

namespace distvote {

namespace {

constexpr std::string_view kShare = "dpol/share";
constexpr std::string_view kLocalSum = "dpol/local-sum";
constexpr std::string_view kTallies = "dpol/tallies";
constexpr std::string_view kAudit = "dpol/audit";

Bytes encode_tally(const Tally& t) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(t.size()));
  for (auto x : t) w.i64(x);
  return std::move(w).bytes();
}

Tally read_tally(ByteReader& r, std::size_t d) {
  auto len = r.u32();
  if (len != d) throw DecodeError("tally dimension mismatch");
  Tally t(d);
  for (auto& x : t) x = r.i64();
  return t;
}

Tally decode_tally_bytes(std::span<const std::uint8_t> bytes, std::size_t d) {
  ByteReader r(bytes);
  Tally t = read_tally(r, d);
  r.expect_done();
  return t;
}

BallotVector decode_share(std::span<const std::uint8_t> bytes, std::size_t d) {
  if (bytes.size() != d) throw DecodeError("share dimension mismatch");
  return BallotVector(bytes.begin(), bytes.end());
}

using TallyMap = std::map<std::uint32_t, Tally>;

Bytes encode_tally_map(std::uint32_t round, const TallyMap& m) {
  ByteWriter w;
  w.u32(round).u32(static_cast<std::uint32_t>(m.size()));
  for (const auto& [cluster, t] : m) {
    w.u32(cluster);
    w.raw(encode_tally(t));
  }
  return std::move(w).bytes();
}

std::pair<std::uint32_t, TallyMap> decode_tally_map(
    std::span<const std::uint8_t> bytes, std::size_t d) {
  ByteReader r(bytes);
  std::uint32_t round = r.u32();
  auto count = r.u32();
  TallyMap m;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto cluster = r.u32();
    m[cluster] = read_tally(r, d);
  }
  r.expect_done();
  return {round, m};
}

struct Shared {
  DpolConfig config;
  Overlay overlay;
  RecipientMap recipients;
  std::vector<std::vector<PeerId>> senders;  // inverse of recipients
  std::vector<std::size_t> choices;
};

class DpolNode final : public Node {
 public:
  DpolNode(std::shared_ptr<const Shared> shared, PeerId self)
      : s_(std::move(shared)), self_(self) {
    cluster_ = s_->overlay.cluster_of[self];
  }

  void on_start(Context& ctx) override {
    const auto& p = s_->config.params;
    auto set = encode_shares(s_->choices[self_], p, ctx.rng().next(), self_);
    ctx.act(Phase::casting, RoleSource::everyone, "voter", "encode-shares");
    const auto& to = s_->recipients[self_];
    for (std::size_t i = 0; i < to.size(); ++i) {
      ctx.send(to[i], Phase::casting, std::string(kShare),
               Bytes(set.shares[i].begin(), set.shares[i].end()));
    }
  }

  void on_message(Context& ctx, const Message& msg) override {
    try {
      if (msg.tag == kShare) {
        on_share(ctx, msg);
      } else if (msg.tag == kLocalSum) {
        on_local_sum(ctx, msg);
      } else if (msg.tag == kTallies) {
        on_tallies(ctx, msg);
      } else if (msg.tag == kAudit) {
        on_audit(ctx, msg);
      }
    } catch (const DecodeError&) {
      ctx.act(msg.phase, RoleSource::everyone, "voter", "reject-malformed");
    }
  }

  bool terminated() const override {
    return final_tally_.has_value() &&
           (!s_->config.audit || audit_done_);
  }

  const std::optional<Tally>& final_tally() const { return final_tally_; }
  const std::set<PeerId>& flagged() const { return flagged_; }
  const std::vector<std::pair<PeerId, BallotVector>>& received() const {
    return shares_;
  }
  bool decode_failed() const { return decode_failed_; }

 private:
  const DpolParams& params() const { return s_->config.params; }
  const std::vector<PeerId>& members() const {
    return s_->overlay.clusters[cluster_];
  }
  std::size_t cluster_count() const { return s_->overlay.clusters.size(); }

  void on_share(Context& ctx, const Message& msg) {
    const auto& expected = s_->senders[self_];
    if (std::find(expected.begin(), expected.end(), msg.from) ==
        expected.end()) {
      return;
    }
    if (local_sum_) return;
    shares_.emplace_back(msg.from, decode_share(msg.payload, params().d));
    if (shares_.size() < params().fanout()) return;

    Tally sum(params().d, 0);
    for (const auto& [_, v] : shares_) sum = add(std::move(sum), v);
    local_sum_ = sum;
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter", "local-sum",
            encode_tally(sum));
    sums_[self_] = sum;
    for (auto m : members()) {
      if (m == self_) continue;
      ctx.send(m, Phase::aggregation, std::string(kLocalSum),
               encode_tally(sum));
    }
    if (s_->config.audit) {
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(shares_.size()));
      for (const auto& [from, v] : shares_) {
        w.u32(from).field(v);
        audit_pool_[from].push_back(v);
      }
      audit_reports_.insert(self_);
      for (auto m : members()) {
        if (m == self_) continue;
        ctx.send(m, Phase::verification, std::string(kAudit), w.bytes());
      }
      maybe_audit(ctx);
    }
    maybe_cluster_tally(ctx);
  }

  void on_local_sum(Context& ctx, const Message& msg) {
    if (s_->overlay.cluster_of[msg.from] != cluster_) return;
    if (sums_.contains(msg.from)) return;
    sums_[msg.from] = decode_tally_bytes(msg.payload, params().d);
    maybe_cluster_tally(ctx);
  }

  void maybe_cluster_tally(Context& ctx) {
    if (own_tally_done_ || !local_sum_) return;
    std::vector<std::optional<Tally>> sums;
    std::vector<PeerId> others;
    for (auto m : members()) {
      auto it = sums_.find(m);
      sums.push_back(it == sums_.end() ? std::nullopt
                                       : std::optional<Tally>(it->second));
      if (m != self_) others.push_back(m);
    }
    auto tally = cluster_tally(sums, params().d);
    if (!tally) return;
    own_tally_done_ = true;
    const auto pred =
        static_cast<std::uint32_t>(s_->overlay.predecessor(cluster_));
    known_[pred] = *tally;
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter", "cluster-tally",
            encode_tally(*tally), std::move(others));
    advance(ctx);
  }

  void on_tallies(Context& ctx, const Message& msg) {
    const auto& expected = s_->senders[self_];
    if (std::find(expected.begin(), expected.end(), msg.from) ==
        expected.end()) {
      return;
    }
    auto [round, map] = decode_tally_map(msg.payload, params().d);
    if (round + 1 >= cluster_count()) return;
    inbox_[round].emplace(msg.from, std::move(map));
    advance(ctx);
  }

  // Sends the current round and consumes completed rounds for as long as
  // possible. Round r carries everything known after r hops.
  void advance(Context& ctx) {
    if (!own_tally_done_ || stalled_) return;
    const std::size_t last_round = cluster_count() - 2;
    for (;;) {
      if (next_send_ <= last_round && next_send_ == next_merge_) {
        ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
                "forward-tallies");
        for (auto to : s_->recipients[self_]) {
          ctx.send(to, Phase::aggregation, std::string(kTallies),
                   encode_tally_map(static_cast<std::uint32_t>(next_send_),
                                    known_));
        }
        ++next_send_;
      }
      if (next_merge_ > last_round) break;
      auto it = inbox_.find(static_cast<std::uint32_t>(next_merge_));
      if (it == inbox_.end() || it->second.size() < params().fanout()) break;
      if (!merge(ctx, it->second)) {
        stalled_ = true;
        return;
      }
      ++next_merge_;
    }
    if (known_.size() == cluster_count() && !final_tally_ && !decode_failed_) {
      evaluate(ctx);
    }
  }

  // Majority over byte-identical reports for every cluster not yet known.
  bool merge(Context& ctx, const std::map<PeerId, TallyMap>& reports) {
    std::map<std::uint32_t, std::map<Tally, std::size_t>> votes;
    std::vector<PeerId> reporters;
    for (const auto& [from, map] : reports) {
      reporters.push_back(from);
      for (const auto& [cluster, t] : map) votes[cluster][t] += 1;
    }
    for (const auto& [cluster, options] : votes) {
      if (options.size() > 1) {
        ByteWriter w;
        w.u32(cluster).u32(static_cast<std::uint32_t>(options.size()));
        ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
                "tally-discrepancy", w.bytes(), reporters);
      }
      if (known_.contains(cluster)) continue;
      const Tally* winner = nullptr;
      for (const auto& [t, count] : options) {
        if (2 * count > reports.size()) winner = &t;
      }
      if (!winner) return false;
      known_[cluster] = *winner;
    }
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter", "merge-tallies",
            {}, std::move(reporters));
    return true;
  }

  void evaluate(Context& ctx) {
    Tally aggregate(params().d, 0);
    for (const auto& [_, t] : known_) {
      for (std::size_t j = 0; j < t.size(); ++j) aggregate[j] += t[j];
    }
    ctx.act(Phase::evaluation, RoleSource::everyone, "voter", "decode-tally",
            encode_tally(aggregate));
    try {
      final_tally_ = decode_tally(aggregate, params());
    } catch (const InconsistentAggregate&) {
      decode_failed_ = true;
    }
  }

  void on_audit(Context& ctx, const Message& msg) {
    if (!s_->config.audit) return;
    if (s_->overlay.cluster_of[msg.from] != cluster_) return;
    if (!audit_reports_.insert(msg.from).second) return;
    ByteReader r(msg.payload);
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      auto sender = r.u32();
      auto v = r.field();
      audit_pool_[sender].emplace_back(v.begin(), v.end());
    }
    maybe_audit(ctx);
  }

  void maybe_audit(Context& ctx) {
    if (audit_done_ || audit_reports_.size() < members().size()) return;
    audit_done_ = true;
    const auto pred = s_->overlay.predecessor(cluster_);
    for (auto sender : s_->overlay.clusters[pred]) {
      auto it = audit_pool_.find(sender);
      std::vector<BallotVector> pooled;
      if (it != audit_pool_.end()) pooled = it->second;
      if (audit_share_set(pooled, params()) == AuditVerdict::invalid) {
        flagged_.insert(sender);
      }
    }
    std::vector<PeerId> others;
    for (auto m : members()) {
      if (m != self_) others.push_back(m);
    }
    ctx.act(Phase::verification, RoleSource::everyone, "voter", "audit-shares",
            {}, std::move(others));
  }

  std::shared_ptr<const Shared> s_;
  PeerId self_;
  std::size_t cluster_ = 0;

  std::vector<std::pair<PeerId, BallotVector>> shares_;
  std::optional<Tally> local_sum_;
  std::map<PeerId, Tally> sums_;
  bool own_tally_done_ = false;
  TallyMap known_;
  std::map<std::uint32_t, std::map<PeerId, TallyMap>> inbox_;
  std::size_t next_send_ = 0;
  std::size_t next_merge_ = 0;
  bool stalled_ = false;
  bool decode_failed_ = false;
  std::optional<Tally> final_tally_;

  std::map<PeerId, std::vector<BallotVector>> audit_pool_;
  std::set<PeerId> audit_reports_;
  bool audit_done_ = false;
  std::set<PeerId> flagged_;
};

}  // namespace

std::optional<Tally> cluster_tally(
    std::span<const std::optional<Tally>> local_sums, std::size_t d) {
  Tally out(d, 0);
  for (const auto& s : local_sums) {
    if (!s || s->size() != d) return std::nullopt;
    for (std::size_t j = 0; j < d; ++j) out[j] += (*s)[j];
  }
  return out;
}

BehaviorRegistry dpol_behaviors(const DpolParams& params) {
  BehaviorRegistry reg;
  const std::size_t d = params.d;
  reg.add("dpol:invalid-shares", [d](PeerId) {
    Behavior b;
    b.rewrite = [d](PeerId, Outgoing out, Rng&) {
      if (out.tag == kShare) {
        auto v = unit_vector(0, d);
        out.payload.assign(v.begin(), v.end());
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  reg.add("dpol:lying-sum", [d](PeerId) {
    Behavior b;
    auto sent = std::make_shared<std::size_t>(0);
    b.rewrite = [d, sent](PeerId, Outgoing out, Rng&) {
      // Lies to every other cluster member so reports diverge.
      if (out.tag == kLocalSum && (*sent)++ % 2 == 0) {
        Tally t = decode_tally_bytes(out.payload, d);
        t[0] += 1;
        out.payload = encode_tally(t);
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  reg.add("dpol:silent", [](PeerId) {
    Behavior b;
    b.rewrite = [](PeerId, Outgoing, Rng&) { return std::vector<Outgoing>{}; };
    return b;
  });
  return reg;
}

DpolOutcome run_dpol(const DpolConfig& config,
                     std::span<const std::size_t> choices,
                     const FaultModel& faults, std::uint64_t seed) {
  const auto& p = config.params;
  p.validate();
  if (choices.size() != p.n) {
    throw ConfigError("choices must list exactly n entries");
  }
  for (auto c : choices) {
    if (c >= p.d) throw ConfigError("choice out of range");
  }

  auto shared = std::make_shared<Shared>();
  shared->config = config;
  shared->overlay = build_ring_clusters(p.n, sub_seed(seed, "dpol/overlay"));
  shared->recipients =
      assign_recipients(shared->overlay, p.k, sub_seed(seed, "dpol/recipients"));
  shared->senders.resize(p.n);
  for (PeerId s = 0; s < p.n; ++s) {
    for (auto r : shared->recipients[s]) shared->senders[r].push_back(s);
  }
  shared->choices.assign(choices.begin(), choices.end());

  Simulator sim(p.n, faults, seed, dpol_behaviors(p));
  std::vector<DpolNode*> nodes;
  for (PeerId i = 0; i < p.n; ++i) {
    auto node = std::make_unique<DpolNode>(shared, i);
    nodes.push_back(node.get());
    sim.set_node(i, std::move(node));
  }

  DpolOutcome out;
  out.run.protocol = "dpol";
  out.run.status = sim.run_until_quiescent(config.max_ticks);
  out.run.overlay = shared->overlay;
  out.recipients = shared->recipients;
  for (PeerId i = 0; i < p.n; ++i) {
    out.run.voters.push_back(i);
    if (nodes[i]->final_tally()) out.run.tallies[i] = *nodes[i]->final_tally();
    out.received[i] = nodes[i]->received();
  }
  finalize_run(out.run, sim);
  std::int64_t decode_failures = 0;
  for (auto v : out.run.honest_voters) {
    const auto& f = nodes[v]->flagged();
    out.run.flagged.insert(f.begin(), f.end());
    decode_failures += nodes[v]->decode_failed();
  }
  out.run.counters["decode_failures"] = decode_failures;
  out.run.counters["flagged"] =
      static_cast<std::int64_t>(out.run.flagged.size());
  if (!out.run.status.quiescent) {
    out.run.diagnostics.push_back("max_ticks reached before quiescence");
  }
  if (out.run.completion < 1.0) {
    out.run.diagnostics.push_back("incomplete: not every honest voter holds a tally");
  }
  out.run.trace = sim.take_trace();
  out.run.roles = sim.take_roles();
  return out;
}

}  // namespace distvote
