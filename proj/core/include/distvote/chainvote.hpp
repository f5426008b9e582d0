#pragma once

// Bulletin-board voting on a toy proof-of-work chain.
//
// registration  each voter obtains a blind-signed eligibility token from the
//               issuer
// casting       voters flood a plaintext transaction (token, choice, nonce)
//               over the gossip mesh
// aggregation   any peer may gather pending transactions into a block and
//               search for a work-nonce; blocks are flooded and validated by
//               every peer, longest chain wins (ties: lowest tip hash)
// evaluation    every peer tallies first spends along its best chain
// verification  every peer re-validates its best chain

#include <map>
#include <optional>
#include <span>

#include "distvote/crypto/blind.hpp"
#include "distvote/run.hpp"

namespace distvote {

struct Transaction {
  crypto::Token token;
  std::uint32_t choice = 0;
  Digest nonce{};

  void write(ByteWriter& w) const;
  static Transaction read(ByteReader& r);
  static Transaction decode(std::span<const std::uint8_t> bytes);
  Bytes encode() const;
  Digest id() const;
  bool operator==(const Transaction&) const = default;
};

struct Block {
  Digest parent{};  // all zero for height 1
  std::uint64_t height = 1;
  std::vector<Transaction> transactions;
  PeerId proposer = 0;
  std::uint64_t work_nonce = 0;

  Digest tx_root() const;
  Bytes header() const;
  Digest hash() const;
  Bytes encode() const;
  static Block decode(std::span<const std::uint8_t> bytes);
};

/// True if the digest starts with at least `bits` zero bits.
bool meets_difficulty(const Digest& hash, unsigned bits);

/// Tries work-nonces start, start+1, ... for up to `budget` attempts.
/// Returns the number of attempts used when a valid nonce was found (and
/// leaves it in block.work_nonce), nullopt otherwise.
std::optional<std::uint64_t> mine_block(Block& block, unsigned difficulty,
                                        std::uint64_t start,
                                        std::uint64_t budget);

class InvalidChain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One peer's knowledge of the chain.
class ChainView {
 public:
  enum class AddResult { added, duplicate, orphaned, invalid };

  ChainView(crypto::RsaPublicKey issuer, std::size_t options,
            unsigned difficulty, std::size_t proposers);

  /// Validates against the block's own ancestry. Orphans are held until
  /// their parent arrives; the returned value describes `block` itself.
  AddResult add(const Block& block);

  /// Reason the last add() returned invalid.
  const std::string& last_error() const { return last_error_; }

  const Digest& tip() const { return tip_; }
  std::uint64_t height() const;
  const Block* find(const Digest& hash) const;
  /// Genesis-first list of block hashes on the best chain.
  std::vector<Digest> best_chain() const;
  bool spent_on_best(const Digest& serial) const;
  /// Whether `tx` could be appended to the best chain.
  bool admissible(const Transaction& tx) const;
  std::size_t block_count() const { return blocks_.size(); }

 private:
  struct Entry {
    Block block;
    std::set<Digest> spent;  // serials spent along the chain ending here
  };

  friend Tally tally_chain(const ChainView&, std::optional<std::uint64_t>);

  bool validate(const Block& block, const Entry* parent);
  void connect(const Digest& hash, Block block);

  crypto::RsaPublicKey issuer_;
  std::size_t options_;
  unsigned difficulty_;
  std::size_t proposers_;
  std::map<Digest, Entry> blocks_;
  std::multimap<Digest, Block> orphans_;  // keyed by missing parent
  std::set<Digest> verified_tokens_;
  Digest tip_{};
  std::string last_error_;
};

/// First-spend counts along the best chain, up to and including `cutoff`
/// height when given. Throws InvalidChain if a block on the best chain fails
/// re-validation.
Tally tally_chain(const ChainView& view, std::optional<std::uint64_t> cutoff);

struct ChainParams {
  std::size_t n = 0;
  std::size_t d = 2;
  unsigned difficulty = 8;
  std::uint64_t cutoff_height = 0;  // 0: no deadline
  std::size_t mesh_degree = 4;
  std::size_t rsa_bits = 1024;
  // Hash attempts per peer per tick; 0 derives one targeting roughly one
  // block per 4*max_delay ticks across the network.
  std::uint64_t hash_budget = 0;

  void validate() const;
};

struct ChainConfig {
  ChainParams params;
  Tick max_ticks = 1'000'000;
};

struct ChainOutcome {
  RunResult run;
  PeerId issuer = 0;
  std::vector<crypto::Issuer::Entry> issuance;
  std::map<PeerId, crypto::Token> tokens;
  // Transactions on the best chain of the lowest-id honest peer, in order,
  // with the block proposer.
  std::vector<std::pair<Transaction, PeerId>> confirmed;
  std::set<PeerId> proposers;
};

BehaviorRegistry chain_behaviors();

ChainOutcome run_chain(const ChainConfig& config,
                       std::span<const std::size_t> choices,
                       const FaultModel& faults, std::uint64_t seed);

}  // namespace distvote
