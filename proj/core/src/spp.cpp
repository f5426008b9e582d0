#include "distvote/spp.hpp"

#include <algorithm>
#include <memory>

namespace distvote {

using crypto::CiphertextVector;
using crypto::Group;

namespace {

constexpr std::string_view kDkg = "spp/dkg";
constexpr std::string_view kPk = "spp/pk";
constexpr std::string_view kBallot = "spp/ballot";
constexpr std::string_view kVerdicts = "spp/verdicts";
constexpr std::string_view kReport = "spp/report";
constexpr std::string_view kDshare = "spp/dshare";
constexpr std::string_view kResult = "spp/result";

enum TimerTag : std::uint64_t {
  kDkgTimer = 1,
  kPkTimer,
  kBallotTimer,
  kVerdictTimer,
  kReportTimer,
  kResultTimer,
};

/// Collects one value per sender and decides by strict majority.
class MajorityBox {
 public:
  explicit MajorityBox(std::size_t expected = 0) : expected_(expected) {}

  bool add(PeerId from, Bytes value) {
    return values_.emplace(from, std::move(value)).second;
  }
  std::optional<Bytes> decided() const { return majority(expected_); }
  std::optional<Bytes> resolve_received() const {
    return majority(values_.size());
  }
  std::size_t received() const { return values_.size(); }
  std::vector<PeerId> senders() const {
    std::vector<PeerId> out;
    for (const auto& [p, _] : values_) out.push_back(p);
    return out;
  }

 private:
  std::optional<Bytes> majority(std::size_t base) const {
    std::map<Bytes, std::size_t> counts;
    for (const auto& [_, v] : values_) {
      if (2 * ++counts[v] > base && base > 0) return v;
    }
    return std::nullopt;
  }

  std::size_t expected_;
  std::map<PeerId, Bytes> values_;
};

Bytes encode_tally_with_count(const Tally& t, std::uint32_t accepted) {
  ByteWriter w;
  w.u32(accepted).u32(static_cast<std::uint32_t>(t.size()));
  for (auto x : t) w.i64(x);
  return std::move(w).bytes();
}

std::pair<Tally, std::uint32_t> decode_tally_with_count(
    std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto accepted = r.u32();
  auto d = r.u32();
  if (d > (1u << 12)) throw DecodeError("implausible tally width");
  Tally t(d);
  for (auto& x : t) x = r.i64();
  r.expect_done();
  return {t, accepted};
}

struct Shared {
  SppConfig config;
  const Group* group;
  Overlay overlay;
  std::vector<PeerId> root;  // sorted; share index = position + 1
  std::vector<std::size_t> choices;
  std::vector<std::size_t> height;  // subtree height per cluster
  Tick patience;
};

class SppNode final : public Node {
 public:
  SppNode(std::shared_ptr<const Shared> shared, PeerId self)
      : s_(std::move(shared)), self_(self) {
    cluster_ = s_->overlay.cluster_of[self];
    const auto& root = s_->root;
    auto it = std::find(root.begin(), root.end(), self);
    if (it != root.end()) {
      root_index_ = static_cast<std::uint32_t>(it - root.begin()) + 1;
    }
    pk_box_ = MajorityBox(s_->config.params.cluster_size);
    result_box_ = MajorityBox(s_->config.params.cluster_size);
    for (auto c : s_->overlay.children(cluster_)) {
      child_boxes_.emplace(c, MajorityBox(s_->config.params.cluster_size));
    }
  }

  void on_start(Context& ctx) override {
    if (!is_root()) return;
    const auto& p = s_->config.params;
    auto dealing = crypto::deal(*s_->group, p.t, s_->root.size(), ctx.rng());
    ctx.act(Phase::registration, RoleSource::seeded_draw, "key-holder",
            "dkg-deal");
    for (std::size_t i = 0; i < s_->root.size(); ++i) {
      const PeerId to = s_->root[i];
      if (to == self_) continue;
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(dealing.commitments.size()));
      for (const auto& c : dealing.commitments) crypto::write_mpz(w, c);
      crypto::write_mpz(w, dealing.shares[i]);
      ctx.send(to, Phase::registration, std::string(kDkg),
               std::move(w).bytes());
    }
    dealings_[self_] = {dealing.commitments, dealing.shares[root_index_ - 1]};
    ctx.set_timer(s_->patience, kDkgTimer);
    maybe_finish_dkg(ctx);
  }

  void on_timer(Context& ctx, std::uint64_t tag) override {
    switch (tag) {
      case kDkgTimer: dkg_timeout_ = true; maybe_finish_dkg(ctx); break;
      case kPkTimer: pk_timeout_ = true; maybe_accept_pk(ctx); break;
      case kBallotTimer: ballot_timeout_ = true; maybe_verify(ctx); break;
      case kVerdictTimer: verdict_timeout_ = true; maybe_aggregate(ctx); break;
      case kReportTimer: report_timeout_ = true; maybe_combine(ctx); break;
      case kResultTimer: result_timeout_ = true; maybe_accept_result(ctx); break;
      default: break;
    }
  }

  void on_message(Context& ctx, const Message& msg) override {
    try {
      dispatch(ctx, msg);
    } catch (const DecodeError&) {
      ctx.act(msg.phase, RoleSource::everyone, "voter", "reject-malformed");
    } catch (const crypto::CryptoError&) {
      ctx.act(msg.phase, RoleSource::everyone, "voter", "reject-malformed");
    }
  }

  bool terminated() const override { return final_tally_.has_value(); }

  const std::optional<Tally>& final_tally() const { return final_tally_; }
  std::int64_t accepted() const { return accepted_total_; }
  bool verification_failed() const { return verification_failed_; }
  const std::optional<std::string>& failure() const { return failure_; }

 private:
  bool is_root() const { return root_index_ != 0; }
  const SppParams& params() const { return s_->config.params; }
  const Group& group() const { return *s_->group; }
  const std::vector<PeerId>& members() const {
    return s_->overlay.clusters[cluster_];
  }
  bool in_cluster(PeerId p, std::size_t c) const {
    return s_->overlay.cluster_of[p] == c;
  }
  std::vector<PeerId> root_except_self() const {
    std::vector<PeerId> out;
    for (auto r : s_->root) {
      if (r != self_) out.push_back(r);
    }
    return out;
  }

  void send_to_children(Context& ctx, Phase phase, std::string_view tag,
                        const Bytes& payload) {
    for (auto c : s_->overlay.children(cluster_)) {
      for (auto m : s_->overlay.clusters[c]) {
        ctx.send(m, phase, std::string(tag), payload);
      }
    }
  }

  void dispatch(Context& ctx, const Message& msg) {
    if (msg.tag == kDkg) {
      if (!is_root() || dkg_done_) return;
      auto it = std::find(s_->root.begin(), s_->root.end(), msg.from);
      if (it == s_->root.end()) return;
      ByteReader r(msg.payload);
      std::vector<mpz_class> commitments(r.u32());
      if (commitments.size() != params().t) return;
      for (auto& c : commitments) c = crypto::read_mpz(r);
      mpz_class share = crypto::read_mpz(r);
      r.expect_done();
      // Complaint rounds are out of scope: an inconsistent dealing is
      // simply left out.
      if (!crypto::verify_dealt_share(group(), commitments, root_index_,
                                      share)) {
        return;
      }
      dealings_[msg.from] = {std::move(commitments), share};
      maybe_finish_dkg(ctx);
    } else if (msg.tag == kPk) {
      if (is_root() || pk_) return;
      auto parent = s_->overlay.parent(cluster_);
      if (!parent || !in_cluster(msg.from, *parent)) return;
      if (pk_box_.received() == 0) ctx.set_timer(s_->patience, kPkTimer);
      pk_box_.add(msg.from, msg.payload);
      maybe_accept_pk(ctx);
    } else if (msg.tag == kBallot) {
      if (!in_cluster(msg.from, cluster_) || verified_) return;
      ballots_.emplace(msg.from, msg.payload);
      maybe_verify(ctx);
    } else if (msg.tag == kVerdicts) {
      if (!in_cluster(msg.from, cluster_) || aggregated_) return;
      ByteReader r(msg.payload);
      std::map<PeerId, bool> v;
      auto count = r.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        auto peer = r.u32();
        v[peer] = r.u8() != 0;
      }
      r.expect_done();
      verdicts_.emplace(msg.from, std::move(v));
      maybe_aggregate(ctx);
    } else if (msg.tag == kReport) {
      auto child = s_->overlay.cluster_of[msg.from];
      auto it = child_boxes_.find(child);
      if (it == child_boxes_.end() || combined_) return;
      auto report = AggregateReport::decode(msg.payload, msg.from);
      if (report.subtree != child) return;
      it->second.add(msg.from, report.canonical());
      maybe_combine(ctx);
    } else if (msg.tag == kDshare) {
      if (!is_root() || result_) return;
      auto it = std::find(s_->root.begin(), s_->root.end(), msg.from);
      if (it == s_->root.end()) return;
      ByteReader r(msg.payload);
      auto count = r.u32();
      std::vector<crypto::DecryptionShare> shares;
      for (std::uint32_t i = 0; i < count; ++i) {
        shares.push_back(crypto::read_decryption_share(r));
      }
      r.expect_done();
      const auto index = static_cast<std::uint32_t>(it - s_->root.begin()) + 1;
      if (shares.size() != params().d) return;
      for (const auto& s : shares) {
        if (s.index != index) return;
      }
      dshares_.emplace(index, std::move(shares));
      maybe_finish_root(ctx);
    } else if (msg.tag == kResult) {
      if (is_root() || result_) return;
      auto parent = s_->overlay.parent(cluster_);
      if (!parent || !in_cluster(msg.from, *parent)) return;
      if (result_box_.received() == 0) ctx.set_timer(s_->patience, kResultTimer);
      result_box_.add(msg.from, msg.payload);
      maybe_accept_result(ctx);
    }
  }

  // registration --------------------------------------------------------

  void maybe_finish_dkg(Context& ctx) {
    if (dkg_done_) return;
    if (dealings_.size() < s_->root.size() && !dkg_timeout_) return;
    dkg_done_ = true;
    mpz_class x = 0;
    mpz_class h = 1;
    for (const auto& [_, d] : dealings_) {
      x += d.second;
      h = group().mul(h, d.first.front());
    }
    key_share_ = crypto::KeyShare{self_, root_index_, group().scalar(x)};
    ctx.act(Phase::registration, RoleSource::seeded_draw, "key-holder",
            "dkg-combine");
    pk_ = crypto::PublicKey{h};
    on_pk(ctx);
  }

  void maybe_accept_pk(Context& ctx) {
    if (pk_) return;
    auto v = pk_box_.decided();
    if (!v && pk_timeout_) v = pk_box_.resolve_received();
    if (!v) return;
    ByteReader r(*v);
    pk_ = crypto::PublicKey{crypto::read_mpz(r)};
    ctx.act(Phase::registration, RoleSource::everyone, "voter", "accept-key",
            {}, pk_box_.senders());
    on_pk(ctx);
  }

  void on_pk(Context& ctx) {
    ByteWriter w;
    crypto::write_mpz(w, pk_->h);
    send_to_children(ctx, Phase::registration, kPk, w.bytes());
    cast(ctx);
  }

  // casting --------------------------------------------------------------

  void cast(Context& ctx) {
    auto ballot = crypto::prove_ballot(group(), *pk_, s_->choices[self_],
                                       params().d, ctx.rng());
    ctx.act(Phase::casting, RoleSource::everyone, "voter", "encrypt-ballot", {},
            root_except_self());
    Bytes payload = crypto::encode(ballot);
    for (auto m : members()) {
      if (m == self_) continue;
      ctx.send(m, Phase::casting, std::string(kBallot), payload);
    }
    ballots_.emplace(self_, std::move(payload));
    ctx.set_timer(s_->patience, kBallotTimer);
    maybe_verify(ctx);
  }

  // aggregation ----------------------------------------------------------

  void maybe_verify(Context& ctx) {
    if (verified_ || !pk_) return;
    if (ballots_.size() < members().size() && !ballot_timeout_) return;
    verified_ = true;
    std::map<PeerId, bool> verdict;
    for (const auto& [peer, bytes] : ballots_) {
      bool ok = false;
      try {
        auto b = crypto::decode_ballot(bytes);
        ok = b.ciphertexts.size() == params().d &&
             crypto::verify_ballot(group(), *pk_, b.ciphertexts, b.proof);
      } catch (const std::exception&) {
        ok = false;
      }
      verdict[peer] = ok;
    }
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
            "verify-ballots");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(verdict.size()));
    for (const auto& [peer, ok] : verdict) w.u32(peer).u8(ok ? 1 : 0);
    for (auto m : members()) {
      if (m == self_) continue;
      ctx.send(m, Phase::aggregation, std::string(kVerdicts), w.bytes());
    }
    verdicts_.emplace(self_, std::move(verdict));
    ctx.set_timer(s_->patience, kVerdictTimer);
    maybe_aggregate(ctx);
  }

  void maybe_aggregate(Context& ctx) {
    if (aggregated_ || !verified_) return;
    if (verdicts_.size() < members().size() && !verdict_timeout_) return;
    aggregated_ = true;
    own_sum_ = CiphertextVector(params().d, crypto::identity_ciphertext());
    own_accepted_ = 0;
    for (const auto& [peer, bytes] : ballots_) {
      std::size_t yes = 0;
      for (const auto& [_, v] : verdicts_) {
        auto it = v.find(peer);
        yes += it != v.end() && it->second;
      }
      if (2 * yes <= verdicts_.size()) continue;
      auto b = crypto::decode_ballot(bytes);
      own_sum_ = crypto::hom_add(group(), own_sum_, b.ciphertexts);
      ++own_accepted_;
    }
    // Every member checked the proofs itself; the verdict exchange only
    // aligns the members on one ballot set.
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
            "aggregate-cluster");
    if (!child_boxes_.empty()) {
      ctx.set_timer(s_->patience * (s_->height[cluster_] + 2), kReportTimer);
    }
    maybe_combine(ctx);
  }

  void maybe_combine(Context& ctx) {
    if (combined_ || !aggregated_) return;
    CiphertextVector total = own_sum_;
    std::uint32_t accepted = own_accepted_;
    std::vector<PeerId> reporters;
    for (const auto& [child, box] : child_boxes_) {
      auto v = box.decided();
      if (!v && report_timeout_) v = box.resolve_received();
      if (!v) {
        if (report_timeout_) failure_ = "no majority report for a child subtree";
        return;
      }
      auto report = AggregateReport::decode(*v, 0);
      total = crypto::hom_add(group(), total, report.ciphertexts);
      accepted += report.accepted;
      auto senders = box.senders();
      reporters.insert(reporters.end(), senders.begin(), senders.end());
    }
    combined_ = true;
    failure_.reset();
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
            "combine-subtree", {}, std::move(reporters));
    if (auto parent = s_->overlay.parent(cluster_)) {
      AggregateReport report{static_cast<std::uint32_t>(cluster_), accepted,
                             total, self_};
      Bytes payload = report.canonical();
      for (auto m : s_->overlay.clusters[*parent]) {
        ctx.send(m, Phase::aggregation, std::string(kReport), payload);
      }
    } else {
      final_aggregate_ = std::move(total);
      accepted_total_ = accepted;
      begin_decrypt(ctx);
    }
  }

  // evaluation -----------------------------------------------------------

  void begin_decrypt(Context& ctx) {
    // Live root members: those whose ballot reached us (plus ourselves).
    std::vector<PeerId> live;
    for (auto r : s_->root) {
      if (r == self_ || ballots_.contains(r)) live.push_back(r);
    }
    if (live.size() > params().t) live.resize(params().t);
    if (std::find(live.begin(), live.end(), self_) != live.end()) {
      std::vector<crypto::DecryptionShare> shares;
      for (const auto& c : *final_aggregate_) {
        shares.push_back(crypto::partial_decrypt(group(), *key_share_, c));
      }
      ctx.act(Phase::evaluation, RoleSource::seeded_draw, "key-holder",
              "partial-decrypt");
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(shares.size()));
      for (const auto& s : shares) crypto::write_decryption_share(w, s);
      for (auto r : s_->root) {
        if (r == self_) continue;
        ctx.send(r, Phase::evaluation, std::string(kDshare), w.bytes());
      }
      dshares_.emplace(root_index_, std::move(shares));
    }
    maybe_finish_root(ctx);
  }

  void maybe_finish_root(Context& ctx) {
    if (result_ || !final_aggregate_) return;
    if (dshares_.size() < params().t) return;
    Tally tally;
    std::vector<PeerId> contributors;
    try {
      for (std::size_t j = 0; j < params().d; ++j) {
        std::vector<crypto::DecryptionShare> column;
        for (const auto& [index, shares] : dshares_) {
          column.push_back(shares[j]);
        }
        tally.push_back(crypto::combine(
            group(), column, params().t, (*final_aggregate_)[j],
            static_cast<std::int64_t>(params().n)));
      }
    } catch (const crypto::CryptoError& e) {
      failure_ = std::string("decryption failed: ") + e.what();
      result_ = Tally{};
      return;
    }
    for (const auto& [index, _] : dshares_) {
      if (s_->root[index - 1] != self_) contributors.push_back(s_->root[index - 1]);
    }
    ctx.act(Phase::evaluation, RoleSource::seeded_draw, "key-holder",
            "combine-decryption", {}, std::move(contributors));
    result_ = tally;
    send_to_children(ctx, Phase::evaluation, kResult,
                     encode_tally_with_count(tally, static_cast<std::uint32_t>(
                                                        accepted_total_)));
    verify(ctx);
  }

  void maybe_accept_result(Context& ctx) {
    if (result_) return;
    auto v = result_box_.decided();
    if (!v && result_timeout_) v = result_box_.resolve_received();
    if (!v) return;
    auto [tally, accepted] = decode_tally_with_count(*v);
    result_ = tally;
    accepted_total_ = accepted;
    ctx.act(Phase::evaluation, RoleSource::everyone, "voter", "accept-result",
            {}, result_box_.senders());
    send_to_children(ctx, Phase::evaluation, kResult, *v);
    verify(ctx);
  }

  // verification ---------------------------------------------------------

  void verify(Context& ctx) {
    std::int64_t sum = 0;
    for (auto x : *result_) sum += x;
    // Without decryption proofs the tally itself is taken on the root
    // cluster's word.
    ctx.act(Phase::verification, RoleSource::everyone, "voter", "verify-tally",
            {}, root_except_self());
    if (result_->size() == params().d && sum == accepted_total_) {
      final_tally_ = *result_;
    } else {
      verification_failed_ = true;
    }
  }

  std::shared_ptr<const Shared> s_;
  PeerId self_;
  std::size_t cluster_ = 0;
  std::uint32_t root_index_ = 0;  // 0: not a key holder

  std::map<PeerId, std::pair<std::vector<mpz_class>, mpz_class>> dealings_;
  bool dkg_done_ = false, dkg_timeout_ = false;
  std::optional<crypto::KeyShare> key_share_;
  MajorityBox pk_box_;
  bool pk_timeout_ = false;
  std::optional<crypto::PublicKey> pk_;

  std::map<PeerId, Bytes> ballots_;
  bool ballot_timeout_ = false, verified_ = false;
  std::map<PeerId, std::map<PeerId, bool>> verdicts_;
  bool verdict_timeout_ = false, aggregated_ = false;
  CiphertextVector own_sum_;
  std::uint32_t own_accepted_ = 0;

  std::map<std::size_t, MajorityBox> child_boxes_;
  bool report_timeout_ = false, combined_ = false;

  std::optional<CiphertextVector> final_aggregate_;
  std::map<std::uint32_t, std::vector<crypto::DecryptionShare>> dshares_;
  MajorityBox result_box_;
  bool result_timeout_ = false;
  std::optional<Tally> result_;
  std::int64_t accepted_total_ = -1;
  std::optional<Tally> final_tally_;
  bool verification_failed_ = false;
  std::optional<std::string> failure_;
};

std::vector<std::size_t> subtree_heights(const Overlay& o) {
  std::vector<std::size_t> h(o.clusters.size(), 0);
  for (std::size_t c = o.clusters.size(); c-- > 0;) {
    for (auto child : o.children(c)) h[c] = std::max(h[c], h[child] + 1);
  }
  return h;
}

}  // namespace

void SppParams::validate() const {
  if (cluster_size < 2) throw ConfigError("cluster_size must be >= 2");
  if (n == 0 || n % cluster_size != 0) {
    throw ConfigError("n must be a positive multiple of cluster_size");
  }
  if (d < 2) throw ConfigError("d must be >= 2");
  if (t < 1 || t > cluster_size) {
    throw ConfigError("threshold t must satisfy 1 <= t <= cluster_size");
  }
}

Bytes AggregateReport::canonical() const {
  ByteWriter w;
  w.u32(subtree).u32(accepted);
  crypto::write_ciphertexts(w, ciphertexts);
  return std::move(w).bytes();
}

AggregateReport AggregateReport::decode(std::span<const std::uint8_t> bytes,
                                        PeerId reporter) {
  ByteReader r(bytes);
  AggregateReport out;
  out.subtree = r.u32();
  out.accepted = r.u32();
  out.ciphertexts = crypto::read_ciphertexts(r);
  r.expect_done();
  out.reporter = reporter;
  return out;
}

std::optional<AggregateReport> resolve_divergence(
    std::span<const AggregateReport> reports) {
  if (reports.empty()) {
    throw std::invalid_argument("resolve_divergence: no reports");
  }
  std::map<Bytes, std::size_t> counts;
  for (const auto& r : reports) {
    if (2 * ++counts[r.canonical()] > reports.size()) return r;
  }
  return std::nullopt;
}

Tally root_decrypt(const Group& group, const CiphertextVector& aggregate,
                   std::span<const crypto::KeyShare> shares,
                   std::size_t threshold, std::int64_t bound) {
  Tally out;
  for (const auto& c : aggregate) {
    std::vector<crypto::DecryptionShare> ds;
    for (const auto& s : shares) ds.push_back(crypto::partial_decrypt(group, s, c));
    out.push_back(crypto::combine(group, ds, threshold, c, bound));
  }
  return out;
}

BehaviorRegistry spp_behaviors(const SppParams& params, const Group& group,
                               const std::set<PeerId>& root_members) {
  (void)params;
  BehaviorRegistry reg;
  const Group* g = &group;
  reg.add("spp:lying-aggregate", [g](PeerId) {
    Behavior b;
    b.rewrite = [g](PeerId, Outgoing out, Rng&) {
      if (out.tag == kReport) {
        auto report = AggregateReport::decode(out.payload, 0);
        if (!report.ciphertexts.empty()) {
          report.ciphertexts[0].b = g->mul(report.ciphertexts[0].b, g->g);
        }
        out.payload = report.canonical();
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  reg.add("spp:invalid-proof", [g](PeerId) {
    Behavior b;
    b.rewrite = [g](PeerId, Outgoing out, Rng&) {
      if (out.tag == kBallot) {
        auto ballot = crypto::decode_ballot(out.payload);
        ballot.proof.sum.response = g->scalar(ballot.proof.sum.response + 1);
        out.payload = crypto::encode(ballot);
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  reg.add("spp:silent-root", [root_members](PeerId peer) {
    Behavior b;
    if (root_members.contains(peer)) {
      b.rewrite = [](PeerId, Outgoing, Rng&) {
        return std::vector<Outgoing>{};
      };
    }
    return b;
  });
  return reg;
}

SppOutcome run_spp(const SppConfig& config,
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
  shared->group = config.group ? config.group : &Group::standard();
  shared->overlay =
      build_tree_clusters(p.n, p.cluster_size, sub_seed(seed, "spp/overlay"));
  shared->root = shared->overlay.clusters[0];
  std::sort(shared->root.begin(), shared->root.end());
  shared->choices.assign(choices.begin(), choices.end());
  shared->height = subtree_heights(shared->overlay);
  shared->patience =
      config.patience ? config.patience : 4 * faults.max_delay + 4;

  std::set<PeerId> root_set(shared->root.begin(), shared->root.end());
  Simulator sim(p.n, faults, seed,
                spp_behaviors(p, *shared->group, root_set));
  std::vector<SppNode*> nodes;
  for (PeerId i = 0; i < p.n; ++i) {
    auto node = std::make_unique<SppNode>(shared, i);
    nodes.push_back(node.get());
    sim.set_node(i, std::move(node));
  }

  SppOutcome out;
  out.run.protocol = "spp";
  out.run.status = sim.run_until_quiescent(config.max_ticks);
  out.run.overlay = shared->overlay;
  out.root_members = shared->root;
  for (PeerId i = 0; i < p.n; ++i) {
    out.run.voters.push_back(i);
    if (nodes[i]->final_tally()) out.run.tallies[i] = *nodes[i]->final_tally();
  }
  finalize_run(out.run, sim);
  std::int64_t failures = 0;
  for (auto v : out.run.honest_voters) {
    failures += nodes[v]->verification_failed();
    if (out.accepted_ballots < 0 && nodes[v]->accepted() >= 0) {
      out.accepted_ballots = nodes[v]->accepted();
    }
    if (const auto& f = nodes[v]->failure()) {
      out.run.diagnostics.push_back("peer " + std::to_string(v) + ": " + *f);
    }
  }
  out.run.counters["accepted_ballots"] = out.accepted_ballots;
  out.run.counters["verification_failures"] = failures;
  if (out.run.completion < 1.0) {
    out.run.diagnostics.push_back(
        "incomplete: not every honest voter holds a verified tally");
  }
  out.run.trace = sim.take_trace();
  out.run.roles = sim.take_roles();
  return out;
}

}  // namespace distvote
