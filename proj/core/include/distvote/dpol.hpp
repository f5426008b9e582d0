#pragma once

// Decentralised polling over a ring of sqrt(n) clusters.
//
// casting      each voter sends its 2k+1 shares to its recipients in the
//              succeeding cluster
// aggregation  recipients sum what they received, broadcast the local sum
//              inside their cluster, and so obtain the preceding cluster's
//              tally; cluster tallies then travel around the ring along the
//              same recipient map, one round per hop, resolved by majority
// evaluation   every voter decodes the global aggregate
// verification (audit mode only) cluster members pool the shares each sender
//              emitted and flag malformed share sets

#include <optional>
#include <span>

#include "distvote/run.hpp"

namespace distvote {

struct DpolConfig {
  DpolParams params;
  bool audit = false;
  Tick max_ticks = 1'000'000;
};

struct DpolOutcome {
  RunResult run;
  RecipientMap recipients;
  // Adversary view: shares each peer received, with their senders.
  std::map<PeerId, std::vector<std::pair<PeerId, BallotVector>>> received;
};

BehaviorRegistry dpol_behaviors(const DpolParams& params);

DpolOutcome run_dpol(const DpolConfig& config,
                     std::span<const std::size_t> choices,
                     const FaultModel& faults, std::uint64_t seed);

/// Component-wise sum of one cluster's local sums; nullopt if any is missing.
std::optional<Tally> cluster_tally(
    std::span<const std::optional<Tally>> local_sums, std::size_t d);

}  // namespace distvote
