#include "distvote/baselines.hpp"

#include <algorithm>
#include <memory>

namespace distvote {

using crypto::CiphertextVector;
using crypto::Group;

namespace {

constexpr std::string_view kDkg = "helios/dkg";
constexpr std::string_view kCommitments = "helios/commitments";
constexpr std::string_view kPk = "helios/pk";
constexpr std::string_view kBallot = "helios/ballot";
constexpr std::string_view kAggregate = "helios/aggregate";
constexpr std::string_view kDshare = "helios/dshare";
constexpr std::string_view kBulletin = "helios/bulletin";

enum TimerTag : std::uint64_t { kKeyTimer = 1, kCastingTimer, kDkgTimer };

void write_commitments(ByteWriter& w, const std::vector<mpz_class>& c) {
  w.u32(static_cast<std::uint32_t>(c.size()));
  for (const auto& x : c) crypto::write_mpz(w, x);
}

std::vector<mpz_class> read_commitments(ByteReader& r) {
  auto k = r.u32();
  if (k > r.remaining()) throw DecodeError("implausible commitment count");
  std::vector<mpz_class> c(k);
  for (auto& x : c) x = crypto::read_mpz(r);
  return c;
}

void write_proven(ByteWriter& w, const crypto::ProvenDecryptionShare& s) {
  crypto::write_decryption_share(w, s.share);
  crypto::write_dleq(w, s.proof);
}

crypto::ProvenDecryptionShare read_proven(ByteReader& r) {
  crypto::ProvenDecryptionShare s;
  s.share = crypto::read_decryption_share(r);
  s.proof = crypto::read_dleq(r);
  return s;
}

mpz_class verification_key(const Group& group,
                           const std::vector<std::vector<mpz_class>>& dealings,
                           std::uint32_t index) {
  mpz_class vk = 1;
  for (const auto& c : dealings) {
    vk = group.mul(vk, crypto::commitment_at(group, c, index));
  }
  return vk;
}

struct Shared {
  HeliosConfig config;
  const Group* group;
  std::vector<std::size_t> choices;
  Tick patience;
};

class TrusteeNode final : public Node {
 public:
  TrusteeNode(std::shared_ptr<const Shared> s, std::uint32_t index)
      : s_(std::move(s)), index_(index) {}

  void on_start(Context& ctx) override {
    const auto& p = s_->config.params;
    auto dealing = crypto::deal(*s_->group, p.t, p.trustees, ctx.rng());
    ctx.act(Phase::registration, RoleSource::configured, "trustee", "dkg-deal");
    for (std::uint32_t i = 1; i <= p.trustees; ++i) {
      if (i == index_) continue;
      ByteWriter w;
      write_commitments(w, dealing.commitments);
      crypto::write_mpz(w, dealing.shares[i - 1]);
      ctx.send(p.trustee(i - 1), Phase::registration, std::string(kDkg),
               std::move(w).bytes());
    }
    ByteWriter w;
    write_commitments(w, dealing.commitments);
    ctx.send(p.hub(), Phase::registration, std::string(kCommitments),
             std::move(w).bytes());
    received_[index_] = dealing.shares[index_ - 1];
    ctx.set_timer(s_->patience, kDkgTimer);
    maybe_combine(ctx);
  }

  void on_timer(Context& ctx, std::uint64_t tag) override {
    if (tag != kDkgTimer) return;
    timed_out_ = true;
    maybe_combine(ctx);
  }

  void on_message(Context& ctx, const Message& msg) override {
    const auto& p = s_->config.params;
    if (msg.tag == kDkg && !share_) {
      if (msg.from <= p.hub() || msg.from > p.trustee(p.trustees - 1)) return;
      const auto dealer = msg.from - p.hub();
      ByteReader r(msg.payload);
      auto commitments = read_commitments(r);
      auto share = crypto::read_mpz(r);
      r.expect_done();
      if (commitments.size() != p.t ||
          !crypto::verify_dealt_share(*s_->group, commitments, index_, share)) {
        return;
      }
      received_[dealer] = share;
      maybe_combine(ctx);
    } else if (msg.tag == kAggregate && msg.from == p.hub()) {
      ByteReader r(msg.payload);
      pending_ = crypto::read_ciphertexts(r);
      r.expect_done();
      maybe_decrypt(ctx);
    }
  }

 private:
  void maybe_combine(Context& ctx) {
    if (share_) return;
    if (received_.size() < s_->config.params.trustees && !timed_out_) return;
    mpz_class x = 0;
    for (const auto& [_, v] : received_) x += v;
    share_ = crypto::KeyShare{ctx.self(), index_, s_->group->scalar(x)};
    ctx.act(Phase::registration, RoleSource::configured, "trustee",
            "dkg-combine");
    maybe_decrypt(ctx);
  }

  void maybe_decrypt(Context& ctx) {
    if (!share_ || !pending_ || done_) return;
    done_ = true;
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(pending_->size()));
    for (const auto& c : *pending_) {
      write_proven(w, crypto::prove_partial_decrypt(*s_->group, *share_, c,
                                                    ctx.rng()));
    }
    ctx.act(Phase::evaluation, RoleSource::configured, "trustee",
            "partial-decrypt");
    ctx.send(s_->config.params.hub(), Phase::evaluation, std::string(kDshare),
             std::move(w).bytes());
  }

  std::shared_ptr<const Shared> s_;
  std::uint32_t index_;
  std::map<std::uint32_t, mpz_class> received_;
  bool timed_out_ = false;
  std::optional<crypto::KeyShare> share_;
  std::optional<CiphertextVector> pending_;
  bool done_ = false;
};

class HubNode final : public Node {
 public:
  explicit HubNode(std::shared_ptr<const Shared> s) : s_(std::move(s)) {}

  void on_start(Context& ctx) override {
    ctx.set_timer(2 * s_->patience, kKeyTimer);
  }

  void on_timer(Context& ctx, std::uint64_t tag) override {
    if (tag == kKeyTimer) {
      key_timeout_ = true;
      maybe_publish_key(ctx);
    } else if (tag == kCastingTimer) {
      close_casting(ctx);
    }
  }

  void on_message(Context& ctx, const Message& msg) override {
    const auto& p = s_->config.params;
    try {
      if (msg.tag == kCommitments && !pk_) {
        if (msg.from <= p.hub()) return;
        ByteReader r(msg.payload);
        auto c = read_commitments(r);
        r.expect_done();
        if (c.size() != p.t) return;
        commitments_.emplace(msg.from - p.hub(), std::move(c));
        maybe_publish_key(ctx);
      } else if (msg.tag == kBallot && !closed_) {
        if (msg.from >= p.n) return;
        ballots_.emplace(msg.from, msg.payload);
        if (ballots_.size() == p.n) close_casting(ctx);
      } else if (msg.tag == kDshare && aggregate_ && !published_) {
        if (msg.from <= p.hub()) return;
        const auto index = msg.from - p.hub();
        ByteReader r(msg.payload);
        auto count = r.u32();
        if (count != p.d) return;
        std::vector<crypto::ProvenDecryptionShare> shares;
        const mpz_class vk = verification_key(*s_->group, dealings(), index);
        for (std::uint32_t j = 0; j < count; ++j) {
          auto s = read_proven(r);
          if (s.share.index != index ||
              !crypto::verify_partial_decrypt(*s_->group, vk, (*aggregate_)[j],
                                              s)) {
            return;
          }
          shares.push_back(std::move(s));
        }
        r.expect_done();
        dshares_.emplace(index, std::move(shares));
        maybe_publish(ctx);
      }
    } catch (const DecodeError&) {
      ctx.act(msg.phase, RoleSource::configured, "hub", "reject-malformed");
    }
  }

 private:
  std::vector<std::vector<mpz_class>> dealings() const {
    std::vector<std::vector<mpz_class>> out;
    for (const auto& [_, c] : commitments_) out.push_back(c);
    return out;
  }

  void maybe_publish_key(Context& ctx) {
    const auto& p = s_->config.params;
    if (pk_ || commitments_.empty()) return;
    if (commitments_.size() < p.trustees && !key_timeout_) return;
    mpz_class h = 1;
    for (const auto& [_, c] : commitments_) h = s_->group->mul(h, c.front());
    pk_ = crypto::PublicKey{h};
    ctx.act(Phase::registration, RoleSource::configured, "hub", "publish-key");
    ByteWriter w;
    crypto::write_mpz(w, h);
    for (PeerId v = 0; v < p.n; ++v) {
      ctx.send(v, Phase::registration, std::string(kPk), w.bytes());
    }
    ctx.set_timer(2 * s_->patience, kCastingTimer);
  }

  void close_casting(Context& ctx) {
    if (closed_) return;
    closed_ = true;
    const auto& p = s_->config.params;
    ctx.act(Phase::casting, RoleSource::configured, "hub", "collect-ballots");
    CiphertextVector sum(p.d, crypto::identity_ciphertext());
    for (const auto& [voter, bytes] : ballots_) {
      try {
        auto b = crypto::decode_ballot(bytes);
        if (b.ciphertexts.size() != p.d ||
            !crypto::verify_ballot(*s_->group, *pk_, b.ciphertexts, b.proof)) {
          continue;
        }
        sum = crypto::hom_add(*s_->group, sum, b.ciphertexts);
        accepted_.emplace_back(voter, bytes);
      } catch (const std::exception&) {
      }
    }
    ctx.act(Phase::aggregation, RoleSource::configured, "hub",
            "aggregate-ballots");
    aggregate_ = std::move(sum);
    Bytes payload = crypto::encode(*aggregate_);
    for (std::size_t i = 0; i < p.trustees; ++i) {
      ctx.send(p.trustee(i), Phase::evaluation, std::string(kAggregate),
               payload);
    }
  }

  void maybe_publish(Context& ctx) {
    const auto& p = s_->config.params;
    if (dshares_.size() < p.t) return;
    Bulletin bulletin;
    bulletin.commitments = dealings();
    bulletin.ballots = accepted_;
    bulletin.aggregate = *aggregate_;
    bulletin.shares.resize(p.d);
    for (std::size_t j = 0; j < p.d; ++j) {
      std::vector<crypto::DecryptionShare> plain;
      for (const auto& [_, shares] : dshares_) {
        bulletin.shares[j].push_back(shares[j]);
        plain.push_back(shares[j].share);
      }
      bulletin.tally.push_back(crypto::combine(
          *s_->group, plain, p.t, (*aggregate_)[j],
          static_cast<std::int64_t>(accepted_.size())));
    }
    published_ = true;
    ctx.act(Phase::evaluation, RoleSource::configured, "hub",
            "combine-decryption");
    ctx.act(Phase::evaluation, RoleSource::configured, "hub",
            "publish-bulletin");
    Bytes payload = bulletin.encode();
    for (PeerId v = 0; v < p.n; ++v) {
      ctx.send(v, Phase::verification, std::string(kBulletin), payload);
    }
  }

  std::shared_ptr<const Shared> s_;
  std::map<std::uint32_t, std::vector<mpz_class>> commitments_;
  bool key_timeout_ = false;
  std::optional<crypto::PublicKey> pk_;
  std::map<PeerId, Bytes> ballots_;
  bool closed_ = false;
  std::vector<std::pair<PeerId, Bytes>> accepted_;
  std::optional<CiphertextVector> aggregate_;
  std::map<std::uint32_t, std::vector<crypto::ProvenDecryptionShare>> dshares_;
  bool published_ = false;
};

class HeliosVoter final : public Node {
 public:
  HeliosVoter(std::shared_ptr<const Shared> s, PeerId self)
      : s_(std::move(s)), self_(self) {}

  void on_message(Context& ctx, const Message& msg) override {
    const auto& p = s_->config.params;
    if (msg.from != p.hub()) return;
    try {
      if (msg.tag == kPk && !pk_) {
        ByteReader r(msg.payload);
        pk_ = crypto::PublicKey{crypto::read_mpz(r)};
        r.expect_done();
        auto ballot = crypto::prove_ballot(*s_->group, *pk_,
                                           s_->choices[self_], p.d, ctx.rng());
        ctx.act(Phase::casting, RoleSource::everyone, "voter",
                "encrypt-ballot");
        own_ = crypto::encode(ballot);
        ctx.send(p.hub(), Phase::casting, std::string(kBallot), own_);
      } else if (msg.tag == kBulletin && pk_ && !tally_ && !failure_) {
        auto bulletin = Bulletin::decode(msg.payload);
        ctx.act(Phase::verification, RoleSource::everyone, "voter",
                "verify-bulletin");
        if (auto err = verify_bulletin(*s_->group, bulletin, p.t, p.d, *pk_,
                                       self_, own_)) {
          failure_ = *err;
        } else {
          tally_ = bulletin.tally;
        }
      }
    } catch (const DecodeError& e) {
      failure_ = std::string("malformed ") + msg.tag + ": " + e.what();
    }
  }

  bool terminated() const override { return tally_.has_value(); }
  const std::optional<Tally>& tally() const { return tally_; }
  const std::optional<std::string>& failure() const { return failure_; }

 private:
  std::shared_ptr<const Shared> s_;
  PeerId self_;
  std::optional<crypto::PublicKey> pk_;
  Bytes own_;
  std::optional<Tally> tally_;
  std::optional<std::string> failure_;
};

}  // namespace

void HeliosParams::validate() const {
  if (n < 1) throw ConfigError("helios needs n >= 1");
  if (d < 2) throw ConfigError("d must be >= 2");
  if (trustees < 1) throw ConfigError("helios needs at least one trustee");
  if (t < 1 || t > trustees) {
    throw ConfigError("threshold t must satisfy 1 <= t <= trustees");
  }
}

Bytes Bulletin::encode() const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(commitments.size()));
  for (const auto& c : commitments) write_commitments(w, c);
  w.u32(static_cast<std::uint32_t>(ballots.size()));
  for (const auto& [voter, bytes] : ballots) w.u32(voter).field(bytes);
  crypto::write_ciphertexts(w, aggregate);
  w.u32(static_cast<std::uint32_t>(shares.size()));
  for (const auto& column : shares) {
    w.u32(static_cast<std::uint32_t>(column.size()));
    for (const auto& s : column) write_proven(w, s);
  }
  w.u32(static_cast<std::uint32_t>(tally.size()));
  for (auto x : tally) w.i64(x);
  return std::move(w).bytes();
}

Bulletin Bulletin::decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Bulletin b;
  auto guard = [&](std::uint32_t count) {
    if (count > r.remaining()) throw DecodeError("implausible count");
    return count;
  };
  b.commitments.resize(guard(r.u32()));
  for (auto& c : b.commitments) c = read_commitments(r);
  b.ballots.resize(guard(r.u32()));
  for (auto& [voter, ballot] : b.ballots) {
    voter = r.u32();
    auto f = r.field();
    ballot.assign(f.begin(), f.end());
  }
  b.aggregate = crypto::read_ciphertexts(r);
  b.shares.resize(guard(r.u32()));
  for (auto& column : b.shares) {
    column.resize(guard(r.u32()));
    for (auto& s : column) s = read_proven(r);
  }
  b.tally.resize(guard(r.u32()));
  for (auto& x : b.tally) x = r.i64();
  r.expect_done();
  return b;
}

std::optional<std::string> verify_bulletin(const Group& group,
                                           const Bulletin& bulletin,
                                           std::size_t threshold,
                                           std::size_t options,
                                           const crypto::PublicKey& used_key,
                                           PeerId voter,
                                           const Bytes& own_ballot) {
  if (bulletin.commitments.empty()) return "no key dealings";
  mpz_class h = 1;
  for (const auto& c : bulletin.commitments) {
    if (c.size() != threshold) return "dealing of wrong degree";
    h = group.mul(h, c.front());
  }
  if (h != used_key.h) return "published dealings do not yield the key used";

  bool own_present = false;
  std::set<PeerId> seen;
  CiphertextVector sum(options, crypto::identity_ciphertext());
  for (const auto& [v, bytes] : bulletin.ballots) {
    if (!seen.insert(v).second) return "voter listed twice";
    if (v == voter) own_present = bytes == own_ballot;
    crypto::EncryptedBallot b;
    try {
      b = crypto::decode_ballot(bytes);
    } catch (const DecodeError&) {
      return "malformed ballot from voter " + std::to_string(v);
    }
    if (b.ciphertexts.size() != options ||
        !crypto::verify_ballot(group, used_key, b.ciphertexts, b.proof)) {
      return "ballot proof fails for voter " + std::to_string(v);
    }
    sum = crypto::hom_add(group, sum, b.ciphertexts);
  }
  if (!own_present) return "own ballot missing or altered";
  if (sum != bulletin.aggregate) return "aggregate does not match ballots";
  if (bulletin.shares.size() != options || bulletin.tally.size() != options) {
    return "decryption record has wrong width";
  }
  for (std::size_t j = 0; j < options; ++j) {
    std::vector<crypto::DecryptionShare> plain;
    for (const auto& s : bulletin.shares[j]) {
      const auto index = s.share.index;
      if (index < 1 || index > bulletin.commitments.size()) {
        return "decryption share index out of range";
      }
      mpz_class vk = verification_key(group, bulletin.commitments, index);
      if (!crypto::verify_partial_decrypt(group, vk, bulletin.aggregate[j], s)) {
        return "decryption proof fails";
      }
      plain.push_back(s.share);
    }
    try {
      auto m = crypto::combine(group, plain, threshold, bulletin.aggregate[j],
                               static_cast<std::int64_t>(bulletin.ballots.size()));
      if (m != bulletin.tally[j]) return "published tally does not decrypt";
    } catch (const crypto::CryptoError& e) {
      return std::string("cannot combine shares: ") + e.what();
    }
  }
  return std::nullopt;
}

BehaviorRegistry helios_behaviors(const Group& group) {
  BehaviorRegistry reg;
  const Group* g = &group;
  reg.add("helios:tamper-bulletin", [g](PeerId) {
    Behavior b;
    b.rewrite = [g](PeerId, Outgoing out, Rng&) {
      if (out.tag == kBulletin) {
        auto bulletin = Bulletin::decode(out.payload);
        if (!bulletin.ballots.empty()) {
          auto ballot = crypto::decode_ballot(bulletin.ballots[0].second);
          ballot.ciphertexts[0].b = g->mul(ballot.ciphertexts[0].b, g->g);
          bulletin.ballots[0].second = crypto::encode(ballot);
        }
        out.payload = bulletin.encode();
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  return reg;
}

HeliosOutcome run_helios(const HeliosConfig& config,
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
  shared->choices.assign(choices.begin(), choices.end());
  shared->patience =
      config.patience ? config.patience : 4 * faults.max_delay + 4;

  const std::size_t peers = p.n + 1 + p.trustees;
  Simulator sim(peers, faults, seed, helios_behaviors(*shared->group));
  std::vector<HeliosVoter*> voters;
  for (PeerId v = 0; v < p.n; ++v) {
    auto node = std::make_unique<HeliosVoter>(shared, v);
    voters.push_back(node.get());
    sim.set_node(v, std::move(node));
  }
  sim.set_node(p.hub(), std::make_unique<HubNode>(shared));
  for (std::size_t i = 0; i < p.trustees; ++i) {
    sim.set_node(p.trustee(i), std::make_unique<TrusteeNode>(
                                   shared, static_cast<std::uint32_t>(i + 1)));
  }

  HeliosOutcome out;
  out.run.protocol = "helios";
  out.run.status = sim.run_until_quiescent(config.max_ticks);
  out.run.overlay = build_star(peers, p.hub());
  for (PeerId v = 0; v < p.n; ++v) {
    out.run.voters.push_back(v);
    if (voters[v]->tally()) out.run.tallies[v] = *voters[v]->tally();
  }
  finalize_run(out.run, sim);
  for (auto v : out.run.honest_voters) {
    if (const auto& f = voters[v]->failure()) {
      ++out.verification_failures;
      out.run.diagnostics.push_back("voter " + std::to_string(v) +
                                    " rejects the bulletin: " + *f);
    }
  }
  if (sim.is_crashed(p.hub())) {
    out.run.diagnostics.push_back("hub crashed: no tally can be produced");
  }
  out.run.counters["verification_failures"] = out.verification_failures;
  out.run.trace = sim.take_trace();
  out.run.roles = sim.take_roles();
  return out;
}

}  // namespace distvote
