#include <gtest/gtest.h>

#include "distvote/chainvote.hpp"
#include "oracles.hpp"

using namespace distvote;

namespace {

constexpr unsigned kDifficulty = 6;

struct Fixture {
  crypto::Issuer issuer;
  std::map<std::uint32_t, crypto::Token> tokens;

  Fixture() : issuer(make_keys()) {
    tokens = crypto::issue_tokens({0, 1, 2, 3}, issuer, 5);
  }
  static crypto::RsaKeyPair make_keys() {
    Rng rng(77);
    return crypto::generate_rsa(512, rng);
  }
  Transaction tx(std::uint32_t voter, std::uint32_t choice, std::uint8_t salt = 0) const {
    Transaction t;
    t.token = tokens.at(voter);
    t.choice = choice;
    t.nonce[0] = salt;
    return t;
  }
  ChainView view() const { return ChainView(issuer.public_key(), 2, kDifficulty, 8); }
};

Block mined(const Digest& parent, std::uint64_t height, std::vector<Transaction> txs,
            PeerId proposer = 0) {
  Block b;
  b.parent = parent;
  b.height = height;
  b.transactions = std::move(txs);
  b.proposer = proposer;
  EXPECT_TRUE(mine_block(b, kDifficulty, 0, 1u << 20).has_value());
  return b;
}

std::vector<std::size_t> draw_choices(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> out(n);
  for (auto& c : out) c = rng.below(d);
  return out;
}

}  // namespace

TEST(Chain, MeetsDifficulty) {
  Digest h{};
  EXPECT_TRUE(meets_difficulty(h, 256));
  h[1] = 0x10;
  EXPECT_TRUE(meets_difficulty(h, 11));
  EXPECT_FALSE(meets_difficulty(h, 12));
  EXPECT_TRUE(meets_difficulty(h, 0));
}

TEST(Chain, MiningAverageMatchesDifficulty) {
  // Expected attempts for 8 leading zero bits is 2^8.
  double total = 0;
  const int blocks = 200;
  for (int i = 0; i < blocks; ++i) {
    Block b;
    b.height = 1;
    b.proposer = static_cast<PeerId>(i);
    auto used = mine_block(b, 8, 0, 1u << 20);
    ASSERT_TRUE(used.has_value());
    EXPECT_TRUE(meets_difficulty(b.hash(), 8));
    total += static_cast<double>(*used);
  }
  const double mean = total / blocks;
  EXPECT_GT(mean, 128.0);
  EXPECT_LT(mean, 512.0);
}

TEST(Chain, MiningBudgetExhausts) {
  Block b;
  EXPECT_FALSE(mine_block(b, 32, 0, 10).has_value());
}

TEST(Chain, EncodingRoundTrip) {
  Fixture f;
  auto b = mined(Digest{}, 1, {f.tx(0, 1), f.tx(1, 0)}, 3);
  auto back = Block::decode(b.encode());
  EXPECT_EQ(back.hash(), b.hash());
  EXPECT_EQ(back.transactions, b.transactions);
  EXPECT_EQ(Transaction::decode(f.tx(2, 1).encode()), f.tx(2, 1));
  auto bytes = b.encode();
  bytes.push_back(0);
  EXPECT_THROW(Block::decode(bytes), DecodeError);
}

TEST(Chain, EmptyViewTalliesZero) {
  Fixture f;
  auto v = f.view();
  EXPECT_EQ(v.height(), 0u);
  EXPECT_TRUE(v.best_chain().empty());
  EXPECT_EQ(tally_chain(v, std::nullopt), (Tally{0, 0}));
}

TEST(Chain, SpentTokenRejected) {
  Fixture f;
  auto v = f.view();
  auto b1 = mined(Digest{}, 1, {f.tx(0, 1)});
  EXPECT_EQ(v.add(b1), ChainView::AddResult::added);
  EXPECT_TRUE(v.spent_on_best(f.tokens.at(0).serial));
  EXPECT_FALSE(v.admissible(f.tx(0, 0, 1)));
  EXPECT_TRUE(v.admissible(f.tx(1, 0)));
  auto b2 = mined(b1.hash(), 2, {f.tx(0, 0, 1)});
  EXPECT_EQ(v.add(b2), ChainView::AddResult::invalid);
  EXPECT_EQ(v.last_error(), "token already spent");
  auto b3 = mined(b1.hash(), 2, {f.tx(1, 0), f.tx(1, 1, 2)});
  EXPECT_EQ(v.add(b3), ChainView::AddResult::invalid);
  EXPECT_EQ(v.last_error(), "token spent twice in one block");
  EXPECT_EQ(tally_chain(v, std::nullopt), (Tally{0, 1}));
}

TEST(Chain, InvalidBlocksRejected) {
  Fixture f;
  auto v = f.view();
  auto unworked = mined(Digest{}, 1, {f.tx(0, 1)});
  unworked.work_nonce += 1;
  if (!meets_difficulty(unworked.hash(), kDifficulty)) {
    EXPECT_EQ(v.add(unworked), ChainView::AddResult::invalid);
    EXPECT_EQ(v.last_error(), "insufficient work");
  }
  auto forged_tx = f.tx(0, 1);
  forged_tx.token.signature += 1;
  EXPECT_EQ(v.add(mined(Digest{}, 1, {forged_tx})), ChainView::AddResult::invalid);
  EXPECT_EQ(v.add(mined(Digest{}, 1, {f.tx(0, 5)})), ChainView::AddResult::invalid);
  EXPECT_EQ(v.add(mined(Digest{}, 2, {})), ChainView::AddResult::invalid);
  EXPECT_EQ(v.add(mined(Digest{}, 1, {}, 99)), ChainView::AddResult::invalid);
}

TEST(Chain, ForkResolvesToLongestThenLowestHash) {
  Fixture f;
  auto v = f.view();
  auto root = mined(Digest{}, 1, {f.tx(0, 0)});
  auto a = mined(root.hash(), 2, {f.tx(1, 0)}, 1);
  auto b = mined(root.hash(), 2, {f.tx(1, 1)}, 2);
  ASSERT_EQ(v.add(root), ChainView::AddResult::added);
  ASSERT_EQ(v.add(a), ChainView::AddResult::added);
  ASSERT_EQ(v.add(b), ChainView::AddResult::added);
  const Digest low = std::min(a.hash(), b.hash());
  EXPECT_EQ(v.tip(), low);
  // Extending the other branch makes it the longest.
  const Block& loser = a.hash() == low ? b : a;
  auto c = mined(loser.hash(), 3, {f.tx(2, 1)}, 3);
  ASSERT_EQ(v.add(c), ChainView::AddResult::added);
  EXPECT_EQ(v.tip(), c.hash());
  EXPECT_EQ(v.best_chain(), (std::vector<Digest>{root.hash(), loser.hash(), c.hash()}));
  auto t = tally_chain(v, std::nullopt);
  EXPECT_EQ(t[0] + t[1], 3);
  EXPECT_EQ(tally_chain(v, 1), (Tally{1, 0}));
  EXPECT_EQ(v.add(c), ChainView::AddResult::duplicate);
}

TEST(Chain, OrphansAdoptedWhenParentArrives) {
  Fixture f;
  auto v = f.view();
  auto b1 = mined(Digest{}, 1, {f.tx(0, 1)});
  auto b2 = mined(b1.hash(), 2, {f.tx(1, 1)});
  auto b3 = mined(b2.hash(), 3, {f.tx(2, 0)});
  EXPECT_EQ(v.add(b3), ChainView::AddResult::orphaned);
  EXPECT_EQ(v.add(b2), ChainView::AddResult::orphaned);
  EXPECT_EQ(v.add(b3), ChainView::AddResult::duplicate);
  EXPECT_EQ(v.add(b1), ChainView::AddResult::added);
  EXPECT_EQ(v.height(), 3u);
  EXPECT_EQ(v.block_count(), 3u);
  EXPECT_EQ(tally_chain(v, std::nullopt), (Tally{1, 2}));
}

TEST(Chain, ParamsValidation) {
  EXPECT_NO_THROW((ChainParams{.n = 8}.validate()));
  EXPECT_THROW((ChainParams{.n = 2}.validate()), ConfigError);
  EXPECT_THROW((ChainParams{.n = 8, .difficulty = 40}.validate()), ConfigError);
  EXPECT_THROW((ChainParams{.n = 8, .mesh_degree = 8}.validate()), ConfigError);
  EXPECT_THROW((ChainParams{.n = 8, .rsa_bits = 128}.validate()), ConfigError);
}

TEST(Chain, HonestRunExact) {
  ChainConfig cfg;
  cfg.params.n = 16;
  cfg.params.d = 3;
  cfg.params.rsa_bits = 512;
  auto choices = draw_choices(16, 3, 1);
  auto out = run_chain(cfg, choices, {}, 1);
  ASSERT_TRUE(out.run.complete());
  EXPECT_EQ(*out.run.agreed_tally(), oracle::histogram(choices, 3));
  EXPECT_EQ(out.confirmed.size(), 16u);
  EXPECT_EQ(out.tokens.size(), 16u);
  EXPECT_EQ(out.issuer, 16u);
  EXPECT_GE(out.run.counters.at("chain_height"), 1);
}

TEST(Chain, IssuerCannotBeFaulted) {
  ChainConfig cfg;
  cfg.params.n = 8;
  cfg.params.rsa_bits = 512;
  std::vector<std::size_t> choices(8, 0);
  FaultModel f;
  f.crashed = {8};
  EXPECT_THROW(run_chain(cfg, choices, f, 1), ConfigError);
}

TEST(Chain, DoubleSpendCountedOnce) {
  ChainConfig cfg;
  cfg.params.n = 12;
  cfg.params.rsa_bits = 512;
  auto choices = draw_choices(12, 2, 3);
  FaultModel f;
  f.byzantine[2] = "chain:double-spend";
  auto out = run_chain(cfg, choices, f, 3);
  std::map<Digest, int> per_token;
  for (const auto& [tx, proposer] : out.confirmed) per_token[tx.token.serial]++;
  for (const auto& [serial, count] : per_token) EXPECT_EQ(count, 1);
  EXPECT_EQ(per_token.size(), 12u);
  ASSERT_TRUE(out.run.agreed_tally().has_value());
  auto t = *out.run.agreed_tally();
  EXPECT_EQ(t[0] + t[1], 12);
}

TEST(Chain, CrashedVotersLeaveExactSurvivorTally) {
  ChainConfig cfg;
  cfg.params.n = 16;
  cfg.params.rsa_bits = 512;
  auto choices = draw_choices(16, 2, 4);
  FaultModel f;
  f.crashed = {3, 9};
  auto out = run_chain(cfg, choices, f, 4);
  ASSERT_TRUE(out.run.complete());
  std::vector<std::size_t> alive;
  for (std::size_t i = 0; i < 16; ++i) {
    if (!f.crashed.contains(static_cast<PeerId>(i))) alive.push_back(choices[i]);
  }
  EXPECT_EQ(*out.run.agreed_tally(), oracle::histogram(alive, 2));
}
