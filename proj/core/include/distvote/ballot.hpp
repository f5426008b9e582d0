#pragma once

// Cryptography-free ballot encoding for decentralised polling.
//
// A choice c among d options becomes 2k+1 unit vectors: k+1 copies of e_c and
// m = k/(d-1) copies of every other unit vector. The component-wise sum T of
// all n voters' shares is affine in the histogram,
//   T_j = (k+1-m) n_j + m n,
// so every voter can invert it exactly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "distvote/simnet.hpp"

namespace distvote {

using BallotVector = std::vector<std::uint8_t>;
using Tally = std::vector<std::int64_t>;

struct DpolParams {
  std::size_t n = 0;
  std::size_t k = 1;
  std::size_t d = 2;

  std::size_t fanout() const { return 2 * k + 1; }
  std::size_t other_copies() const { return k / (d - 1); }

  /// Checks d >= 2, k >= 1 and (d-1) | k.
  void validate_encoding() const;
  /// Additionally: n a perfect square and 2k+1 <= sqrt(n).
  void validate() const;
};

struct ShareSet {
  PeerId owner = 0;
  std::vector<BallotVector> shares;
};

class InconsistentAggregate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

BallotVector unit_vector(std::size_t index, std::size_t d);

/// Shares in seeded random order so a share's position reveals nothing.
ShareSet encode_shares(std::size_t choice, const DpolParams& params,
                       std::uint64_t seed, PeerId owner = 0);

/// Inverts the aggregate; throws InconsistentAggregate when the result is not
/// a non-negative integral histogram summing to n.
Tally decode_tally(std::span<const std::int64_t> aggregate,
                   const DpolParams& params);

enum class AuditVerdict { valid, invalid, inconclusive };

std::string_view to_string(AuditVerdict v);

/// Checks one sender's pooled shares against the honest multiset pattern.
/// Fewer than 2k+1 shares is never flagged.
AuditVerdict audit_share_set(std::span<const BallotVector> shares,
                             const DpolParams& params);

Tally add(Tally acc, std::span<const std::uint8_t> v);
Tally histogram(std::span<const std::size_t> choices, std::size_t d);

}  // namespace distvote
