#include "distvote/chainvote.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace distvote {

using crypto::Token;

namespace {

constexpr std::string_view kTokenRequest = "chain/token-request";
constexpr std::string_view kTokenReply = "chain/token";
constexpr std::string_view kTx = "chain/tx";
constexpr std::string_view kBlock = "chain/block";

constexpr std::uint64_t kMineTimer = 1;

const Digest kZero{};

std::optional<std::string> check_block(const Block& block,
                                       const std::set<Digest>* parent_spent,
                                       std::uint64_t parent_height,
                                       const crypto::RsaPublicKey& issuer,
                                       std::size_t options, unsigned difficulty,
                                       std::size_t proposers,
                                       std::set<Digest>* token_cache) {
  if (block.height != parent_height + 1) return "height does not follow parent";
  if (block.proposer >= proposers) return "unknown proposer";
  if (!meets_difficulty(block.hash(), difficulty)) return "insufficient work";
  std::set<Digest> in_block;
  for (const auto& tx : block.transactions) {
    if (tx.choice >= options) return "choice out of range";
    if (!in_block.insert(tx.token.serial).second) {
      return "token spent twice in one block";
    }
    if (parent_spent && parent_spent->contains(tx.token.serial)) {
      return "token already spent";
    }
    ByteWriter w;
    crypto::write_token(w, tx.token);
    Digest key = sha256(w.bytes());
    if (token_cache && token_cache->contains(key)) continue;
    if (!crypto::verify_token(tx.token, issuer)) return "token does not verify";
    if (token_cache) token_cache->insert(key);
  }
  return std::nullopt;
}

}  // namespace

// Transaction / Block ------------------------------------------------------

void Transaction::write(ByteWriter& w) const {
  crypto::write_token(w, token);
  w.u32(choice).digest(nonce);
}

Transaction Transaction::read(ByteReader& r) {
  Transaction tx;
  tx.token = crypto::read_token(r);
  tx.choice = r.u32();
  tx.nonce = r.digest();
  return tx;
}

Transaction Transaction::decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto tx = read(r);
  r.expect_done();
  return tx;
}

Bytes Transaction::encode() const {
  ByteWriter w;
  write(w);
  return std::move(w).bytes();
}

Digest Transaction::id() const { return sha256(encode()); }

Digest Block::tx_root() const {
  ByteWriter w;
  w.field("distvote/tx-root").u32(static_cast<std::uint32_t>(transactions.size()));
  for (const auto& tx : transactions) w.digest(tx.id());
  return sha256(w.bytes());
}

Bytes Block::header() const {
  ByteWriter w;
  w.digest(parent).u64(height).digest(tx_root()).u32(proposer).u64(work_nonce);
  return std::move(w).bytes();
}

Digest Block::hash() const { return sha256(header()); }

Bytes Block::encode() const {
  ByteWriter w;
  w.digest(parent).u64(height).u32(proposer).u64(work_nonce);
  w.u32(static_cast<std::uint32_t>(transactions.size()));
  for (const auto& tx : transactions) tx.write(w);
  return std::move(w).bytes();
}

Block Block::decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Block b;
  b.parent = r.digest();
  b.height = r.u64();
  b.proposer = r.u32();
  b.work_nonce = r.u64();
  auto count = r.u32();
  if (count > r.remaining()) throw DecodeError("implausible transaction count");
  for (std::uint32_t i = 0; i < count; ++i) {
    b.transactions.push_back(Transaction::read(r));
  }
  r.expect_done();
  return b;
}

bool meets_difficulty(const Digest& hash, unsigned bits) {
  if (bits > 256) return false;
  for (std::size_t i = 0; i < hash.size() && bits > 0; ++i) {
    const unsigned take = std::min(bits, 8u);
    const std::uint8_t mask = static_cast<std::uint8_t>(0xff << (8 - take));
    if (hash[i] & mask) return false;
    bits -= take;
  }
  return true;
}

std::optional<std::uint64_t> mine_block(Block& block, unsigned difficulty,
                                        std::uint64_t start,
                                        std::uint64_t budget) {
  // Everything but the nonce is fixed, so hash a prebuilt header and patch
  // the trailing eight bytes.
  block.work_nonce = 0;
  Bytes header = block.header();
  for (std::uint64_t i = 0; i < budget; ++i) {
    const std::uint64_t nonce = start + i;
    for (int b = 0; b < 8; ++b) {
      header[header.size() - 1 - b] = static_cast<std::uint8_t>(nonce >> (8 * b));
    }
    if (meets_difficulty(sha256(header), difficulty)) {
      block.work_nonce = nonce;
      return i + 1;
    }
  }
  return std::nullopt;
}

// ChainView ----------------------------------------------------------------

ChainView::ChainView(crypto::RsaPublicKey issuer, std::size_t options,
                     unsigned difficulty, std::size_t proposers)
    : issuer_(std::move(issuer)),
      options_(options),
      difficulty_(difficulty),
      proposers_(proposers) {}

std::uint64_t ChainView::height() const {
  if (tip_ == kZero) return 0;
  return blocks_.at(tip_).block.height;
}

const Block* ChainView::find(const Digest& hash) const {
  auto it = blocks_.find(hash);
  return it == blocks_.end() ? nullptr : &it->second.block;
}

std::vector<Digest> ChainView::best_chain() const {
  std::vector<Digest> out;
  for (Digest h = tip_; h != kZero; h = blocks_.at(h).block.parent) {
    out.push_back(h);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

bool ChainView::spent_on_best(const Digest& serial) const {
  if (tip_ == kZero) return false;
  return blocks_.at(tip_).spent.contains(serial);
}

bool ChainView::admissible(const Transaction& tx) const {
  if (tx.choice >= options_ || spent_on_best(tx.token.serial)) return false;
  return crypto::verify_token(tx.token, issuer_);
}

bool ChainView::validate(const Block& block, const Entry* parent) {
  auto err = check_block(block, parent ? &parent->spent : nullptr,
                         parent ? parent->block.height : 0, issuer_, options_,
                         difficulty_, proposers_, &verified_tokens_);
  if (err) {
    last_error_ = *err;
    return false;
  }
  return true;
}

void ChainView::connect(const Digest& hash, Block block) {
  Entry entry;
  if (block.parent != kZero) entry.spent = blocks_.at(block.parent).spent;
  for (const auto& tx : block.transactions) entry.spent.insert(tx.token.serial);
  const std::uint64_t h = block.height;
  entry.block = std::move(block);
  blocks_.emplace(hash, std::move(entry));
  const std::uint64_t best = height();
  if (h > best || (h == best && hash < tip_)) tip_ = hash;
}

ChainView::AddResult ChainView::add(const Block& block) {
  const Digest hash = block.hash();
  if (blocks_.contains(hash)) return AddResult::duplicate;
  if (block.parent != kZero && !blocks_.contains(block.parent)) {
    auto [lo, hi] = orphans_.equal_range(block.parent);
    for (auto it = lo; it != hi; ++it) {
      if (it->second.hash() == hash) return AddResult::duplicate;
    }
    orphans_.emplace(block.parent, block);
    return AddResult::orphaned;
  }
  const Entry* parent =
      block.parent == kZero ? nullptr : &blocks_.at(block.parent);
  if (!validate(block, parent)) return AddResult::invalid;
  connect(hash, block);

  // Adopt any orphans this block completes.
  std::vector<Digest> ready{hash};
  while (!ready.empty()) {
    Digest p = ready.back();
    ready.pop_back();
    auto [lo, hi] = orphans_.equal_range(p);
    std::vector<Block> children;
    for (auto it = lo; it != hi; ++it) children.push_back(it->second);
    orphans_.erase(lo, hi);
    for (auto& child : children) {
      Digest ch = child.hash();
      if (blocks_.contains(ch) || !validate(child, &blocks_.at(p))) continue;
      connect(ch, std::move(child));
      ready.push_back(ch);
    }
  }
  return AddResult::added;
}

Tally tally_chain(const ChainView& view, std::optional<std::uint64_t> cutoff) {
  Tally tally(view.options_, 0);
  std::set<Digest> spent;
  std::uint64_t height = 0;
  for (const auto& h : view.best_chain()) {
    const Block& b = *view.find(h);
    if (auto err = check_block(b, &spent, height, view.issuer_, view.options_,
                               view.difficulty_, view.proposers_, nullptr)) {
      throw InvalidChain("block at height " + std::to_string(b.height) + ": " +
                         *err);
    }
    height = b.height;
    if (cutoff && b.height > *cutoff) break;
    for (const auto& tx : b.transactions) {
      spent.insert(tx.token.serial);
      ++tally[tx.choice];
    }
  }
  return tally;
}

// Simulation ---------------------------------------------------------------

void ChainParams::validate() const {
  if (n < 3) throw ConfigError("chainvote needs n >= 3");
  if (d < 2) throw ConfigError("d must be >= 2");
  if (difficulty > 32) throw ConfigError("difficulty must be <= 32 bits");
  if (mesh_degree < 2 || mesh_degree >= n) {
    throw ConfigError("mesh_degree must satisfy 2 <= degree < n");
  }
  if (rsa_bits < 256) throw ConfigError("rsa_bits must be >= 256");
}

namespace {

struct Shared {
  ChainConfig config;
  Overlay mesh;
  PeerId issuer = 0;
  crypto::RsaPublicKey issuer_pk;
  std::vector<std::size_t> choices;
  std::set<PeerId> double_spenders;
  std::uint64_t budget = 1;
};

class IssuerNode final : public Node {
 public:
  explicit IssuerNode(crypto::RsaKeyPair keys) : issuer_(std::move(keys)) {}

  void on_message(Context& ctx, const Message& msg) override {
    if (msg.tag != kTokenRequest) return;
    ByteReader r(msg.payload);
    mpz_class blinded = crypto::read_mpz(r);
    r.expect_done();
    auto sig = issuer_.sign_request(msg.from, blinded);
    ctx.act(Phase::registration, RoleSource::configured, "issuer",
            sig ? "sign-token" : "refuse-token");
    if (!sig) return;
    ByteWriter w;
    crypto::write_mpz(w, *sig);
    ctx.send(msg.from, Phase::registration, std::string(kTokenReply),
             std::move(w).bytes());
  }

  const crypto::Issuer& issuer() const { return issuer_; }

 private:
  crypto::Issuer issuer_;
};

class ChainNode final : public Node {
 public:
  ChainNode(std::shared_ptr<const Shared> shared, PeerId self)
      : s_(std::move(shared)),
        self_(self),
        view_(s_->issuer_pk, s_->config.params.d, s_->config.params.difficulty,
              s_->config.params.n) {}

  void on_start(Context& ctx) override {
    ctx.rng().fill(serial_);
    r_ = crypto::random_blinding(s_->issuer_pk, ctx.rng());
    ByteWriter w;
    crypto::write_mpz(w, crypto::blind(serial_, s_->issuer_pk, r_));
    ctx.act(Phase::registration, RoleSource::everyone, "voter",
            "request-token");
    ctx.send(s_->issuer, Phase::registration, std::string(kTokenRequest),
             std::move(w).bytes());
  }

  void on_message(Context& ctx, const Message& msg) override {
    try {
      if (msg.tag == kTokenReply) {
        on_token(ctx, msg);
      } else if (msg.tag == kTx) {
        on_tx(ctx, msg.from, Transaction::decode(msg.payload));
      } else if (msg.tag == kBlock) {
        on_block(ctx, msg.from, Block::decode(msg.payload));
      }
    } catch (const DecodeError&) {
      ctx.act(msg.phase, RoleSource::everyone, "voter", "reject-malformed");
    }
  }

  void on_timer(Context& ctx, std::uint64_t tag) override {
    if (tag != kMineTimer) return;
    armed_ = false;
    mine(ctx);
    arm(ctx);
  }

  void on_quiescent(Context& ctx) override {
    std::optional<std::uint64_t> cutoff;
    if (s_->config.params.cutoff_height) cutoff = s_->config.params.cutoff_height;
    try {
      auto tally = tally_chain(view_, cutoff);
      ctx.act(Phase::evaluation, RoleSource::everyone, "voter", "tally-chain");
      ctx.act(Phase::verification, RoleSource::everyone, "voter",
              "verify-chain");
      tally_ = std::move(tally);
    } catch (const InvalidChain& e) {
      failure_ = e.what();
    }
  }

  bool terminated() const override { return tally_.has_value(); }

  const std::optional<Tally>& tally() const { return tally_; }
  const ChainView& view() const { return view_; }
  const std::optional<Token>& token() const { return token_; }
  const std::optional<std::string>& failure() const { return failure_; }
  std::uint64_t attempts() const { return attempts_; }

 private:
  void flood(Context& ctx, PeerId except, Phase phase, std::string_view tag,
             const Bytes& payload) {
    for (auto q : s_->mesh.neighbours(self_)) {
      if (q == except) continue;
      ctx.send(q, phase, std::string(tag), payload);
    }
  }

  void on_token(Context& ctx, const Message& msg) {
    if (token_ || msg.from != s_->issuer) return;
    ByteReader r(msg.payload);
    mpz_class bsig = crypto::read_mpz(r);
    r.expect_done();
    Token t = crypto::unblind(serial_, bsig, r_, s_->issuer_pk);
    if (!crypto::verify_token(t, s_->issuer_pk)) return;
    token_ = t;
    cast(ctx);
  }

  void cast(Context& ctx) {
    const auto d = static_cast<std::uint32_t>(s_->config.params.d);
    const auto choice = static_cast<std::uint32_t>(s_->choices[self_]);
    std::vector<Transaction> txs;
    Transaction tx{*token_, choice, {}};
    ctx.rng().fill(tx.nonce);
    txs.push_back(tx);
    if (s_->double_spenders.contains(self_)) {
      Transaction again{*token_, (choice + 1) % d, {}};
      ctx.rng().fill(again.nonce);
      txs.push_back(again);
    }
    ctx.act(Phase::casting, RoleSource::everyone, "voter", "cast-transaction");
    for (const auto& t : txs) {
      seen_tx_.insert(t.id());
      mempool_.emplace(t.id(), t);
      flood(ctx, self_, Phase::casting, kTx, t.encode());
    }
    dirty_ = true;
    arm(ctx);
  }

  void on_tx(Context& ctx, PeerId from, Transaction tx) {
    Digest id = tx.id();
    if (!seen_tx_.insert(id).second) return;
    if (tx.choice >= s_->config.params.d ||
        !crypto::verify_token(tx.token, s_->issuer_pk)) {
      return;
    }
    // Conflicting spends are relayed too; only the chain decides.
    flood(ctx, from, Phase::casting, kTx, tx.encode());
    mempool_.emplace(id, std::move(tx));
    dirty_ = true;
    arm(ctx);
  }

  void on_block(Context& ctx, PeerId from, const Block& block) {
    Digest h = block.hash();
    if (!seen_block_.insert(h).second) return;
    auto result = view_.add(block);
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
            "validate-block");
    if (result == ChainView::AddResult::invalid) return;
    flood(ctx, from, Phase::aggregation, kBlock, block.encode());
    dirty_ = true;
    arm(ctx);
  }

  bool below_cutoff() const {
    const auto cutoff = s_->config.params.cutoff_height;
    return cutoff == 0 || view_.height() < cutoff;
  }

  void rebuild() {
    dirty_ = false;
    candidate_.reset();
    if (!below_cutoff()) return;
    Block b;
    b.parent = view_.tip();
    b.height = view_.height() + 1;
    b.proposer = self_;
    std::set<Digest> serials;
    for (const auto& [id, tx] : mempool_) {
      if (serials.contains(tx.token.serial)) continue;
      if (!view_.admissible(tx)) continue;
      serials.insert(tx.token.serial);
      b.transactions.push_back(tx);
    }
    if (b.transactions.empty()) return;
    candidate_ = std::move(b);
    restart_nonce_ = true;
  }

  bool has_work() {
    if (dirty_) rebuild();
    return candidate_.has_value();
  }

  void arm(Context& ctx) {
    if (armed_ || !has_work()) return;
    armed_ = true;
    ctx.set_timer(1, kMineTimer);
  }

  void mine(Context& ctx) {
    if (!has_work()) return;
    if (restart_nonce_) {
      next_nonce_ = ctx.rng().next();
      restart_nonce_ = false;
    }
    const auto budget = s_->budget;
    auto used = mine_block(*candidate_, s_->config.params.difficulty,
                           next_nonce_, budget);
    attempts_ += used.value_or(budget);
    next_nonce_ += budget;
    if (!used) return;
    Block block = std::move(*candidate_);
    candidate_.reset();
    dirty_ = true;
    ctx.act(Phase::aggregation, RoleSource::self_selected, "miner",
            "propose-block");
    seen_block_.insert(block.hash());
    view_.add(block);
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter",
            "validate-block");
    flood(ctx, self_, Phase::aggregation, kBlock, block.encode());
  }

  std::shared_ptr<const Shared> s_;
  PeerId self_;
  ChainView view_;
  Digest serial_{};
  mpz_class r_;
  std::optional<Token> token_;
  std::map<Digest, Transaction> mempool_;
  std::set<Digest> seen_tx_;
  std::set<Digest> seen_block_;
  std::optional<Block> candidate_;
  bool dirty_ = false;
  bool armed_ = false;
  bool restart_nonce_ = true;
  std::uint64_t next_nonce_ = 0;
  std::uint64_t attempts_ = 0;
  std::optional<Tally> tally_;
  std::optional<std::string> failure_;
};

}  // namespace

BehaviorRegistry chain_behaviors() {
  BehaviorRegistry reg;
  reg.add("chain:double-spend", [](PeerId) {
    Behavior b;
    b.id = "chain:double-spend";
    return b;
  });
  reg.add("chain:withhold-block", [](PeerId) {
    Behavior b;
    b.rewrite = [](PeerId self, Outgoing out, Rng&) {
      if (out.tag == kBlock && Block::decode(out.payload).proposer == self) {
        return std::vector<Outgoing>{};
      }
      return std::vector<Outgoing>{std::move(out)};
    };
    return b;
  });
  reg.add("chain:silent", [](PeerId) {
    Behavior b;
    b.rewrite = [](PeerId, Outgoing, Rng&) { return std::vector<Outgoing>{}; };
    return b;
  });
  return reg;
}

ChainOutcome run_chain(const ChainConfig& config,
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
  shared->mesh = build_gossip_mesh(p.n, p.mesh_degree,
                                   sub_seed(seed, "chain/mesh"));
  shared->issuer = static_cast<PeerId>(p.n);
  shared->choices.assign(choices.begin(), choices.end());
  for (const auto& [peer, id] : faults.byzantine) {
    if (id == "chain:double-spend") shared->double_spenders.insert(peer);
  }
  if (p.hash_budget) {
    shared->budget = p.hash_budget;
  } else {
    const double work = std::ldexp(1.0, static_cast<int>(p.difficulty));
    const double per_tick =
        work / static_cast<double>(p.n * 4 * std::max<Tick>(faults.max_delay, 1));
    shared->budget = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(per_tick)));
  }
  Rng key_rng(sub_seed(seed, "chain/issuer-key"));
  auto keys = crypto::generate_rsa(p.rsa_bits, key_rng);
  shared->issuer_pk = keys.pub;

  if (faults.crashed.contains(shared->issuer) ||
      faults.byzantine.contains(shared->issuer)) {
    throw ConfigError("the token issuer cannot be faulted");
  }
  Simulator sim(p.n + 1, faults, seed, chain_behaviors());
  std::vector<ChainNode*> nodes;
  for (PeerId i = 0; i < p.n; ++i) {
    auto node = std::make_unique<ChainNode>(shared, i);
    nodes.push_back(node.get());
    sim.set_node(i, std::move(node));
  }
  auto issuer_node = std::make_unique<IssuerNode>(std::move(keys));
  IssuerNode* issuer = issuer_node.get();
  sim.set_node(shared->issuer, std::move(issuer_node));

  ChainOutcome out;
  out.run.protocol = "chainvote";
  out.run.status = sim.run_until_quiescent(config.max_ticks);
  out.run.overlay = shared->mesh;
  out.issuer = shared->issuer;
  out.issuance = issuer->issuer().transcript();
  std::int64_t attempts = 0;
  for (PeerId i = 0; i < p.n; ++i) {
    out.run.voters.push_back(i);
    if (nodes[i]->tally()) out.run.tallies[i] = *nodes[i]->tally();
    if (nodes[i]->token()) out.tokens[i] = *nodes[i]->token();
    attempts += static_cast<std::int64_t>(nodes[i]->attempts());
  }
  finalize_run(out.run, sim);
  for (auto v : out.run.honest_voters) {
    if (const auto& f = nodes[v]->failure()) {
      out.run.diagnostics.push_back("peer " + std::to_string(v) + ": " + *f);
    }
  }
  if (!out.run.honest_voters.empty()) {
    const ChainView& view = nodes[out.run.honest_voters.front()]->view();
    for (const auto& h : view.best_chain()) {
      const Block* b = view.find(h);
      if (p.cutoff_height && b->height > p.cutoff_height) break;
      out.proposers.insert(b->proposer);
      for (const auto& tx : b->transactions) {
        out.confirmed.emplace_back(tx, b->proposer);
      }
    }
    out.run.counters["chain_height"] = static_cast<std::int64_t>(view.height());
    out.run.counters["blocks_known"] =
        static_cast<std::int64_t>(view.block_count());
  }
  out.run.counters["hash_attempts"] = attempts;
  out.run.counters["confirmed_transactions"] =
      static_cast<std::int64_t>(out.confirmed.size());
  out.run.trace = sim.take_trace();
  out.run.roles = sim.take_roles();
  return out;
}

}  // namespace distvote
