#pragma once

// Scalable and secure aggregation over a binary tree of clusters.
//
// registration  the root cluster runs a joint Feldman DKG; the public key is
//               pushed down the tree, each level accepting it by majority
// casting       voters encrypt a unit vector with a validity proof and send
//               it to their own cluster
// aggregation   members verify proofs, exchange verdicts, homomorphically
//               add the majority-accepted ballots, fold in their children's
//               majority-resolved reports and report to the parent cluster
// evaluation    the t lowest live root members partially decrypt; the
//               plaintext tally flows down the tree
// verification  each voter checks the tally's component sum equals the
//               number of accepted ballots

#include <optional>
#include <span>

#include "distvote/crypto/threshold.hpp"
#include "distvote/run.hpp"

namespace distvote {

struct SppParams {
  std::size_t n = 0;
  std::size_t cluster_size = 4;
  std::size_t t = 3;
  std::size_t d = 2;

  void validate() const;
};

struct SppConfig {
  SppParams params;
  const crypto::Group* group = nullptr;  // defaults to Group::standard()
  Tick max_ticks = 1'000'000;
  // Fallback wait before proceeding with partial inputs; 0 picks a window
  // derived from max_delay. Honest fault-free runs never hit it.
  Tick patience = 0;
};

struct AggregateReport {
  std::uint32_t subtree = 0;
  std::uint32_t accepted = 0;
  crypto::CiphertextVector ciphertexts;
  PeerId reporter = 0;

  /// Bytes compared for majority: everything except the reporter.
  Bytes canonical() const;
  static AggregateReport decode(std::span<const std::uint8_t> bytes,
                                PeerId reporter);
};

/// Strict majority over byte-identical reports; nullopt on a tie or split.
/// Throws std::invalid_argument on empty input.
std::optional<AggregateReport> resolve_divergence(
    std::span<const AggregateReport> reports);

/// Component-wise threshold decryption of the final aggregate with the given
/// key shares, recovering counts in [0, bound].
Tally root_decrypt(const crypto::Group& group,
                   const crypto::CiphertextVector& aggregate,
                   std::span<const crypto::KeyShare> shares,
                   std::size_t threshold, std::int64_t bound);

struct SppOutcome {
  RunResult run;
  std::vector<PeerId> root_members;
  std::int64_t accepted_ballots = -1;  // as reported with the final tally
};

BehaviorRegistry spp_behaviors(const SppParams& params,
                               const crypto::Group& group,
                               const std::set<PeerId>& root_members);

SppOutcome run_spp(const SppConfig& config,
                   std::span<const std::size_t> choices,
                   const FaultModel& faults, std::uint64_t seed);

}  // namespace distvote
