#pragma once

// Reference protocols.
//
// Helios-like: voters send proven encrypted ballots to a hub, which adds them
// up; fixed trustees threshold-decrypt with proofs; the hub publishes a
// bulletin that every voter re-verifies on its own.
//
// Full mesh: every voter additively shares its unit vector with every other
// voter; every voter broadcasts its column sum; 2n(n-1) messages in total.

#include <optional>
#include <span>

#include "distvote/crypto/threshold.hpp"
#include "distvote/run.hpp"

namespace distvote {

struct HeliosParams {
  std::size_t n = 0;
  std::size_t trustees = 3;
  std::size_t t = 2;
  std::size_t d = 2;

  void validate() const;
  PeerId hub() const { return static_cast<PeerId>(n); }
  PeerId trustee(std::size_t i) const { return static_cast<PeerId>(n + 1 + i); }
};

struct HeliosConfig {
  HeliosParams params;
  const crypto::Group* group = nullptr;  // defaults to Group::standard()
  Tick max_ticks = 1'000'000;
  Tick patience = 0;  // 0: derived from max_delay
};

/// The hub's published record.
struct Bulletin {
  std::vector<std::vector<mpz_class>> commitments;  // per trustee dealing
  std::vector<std::pair<PeerId, Bytes>> ballots;    // accepted, encoded
  crypto::CiphertextVector aggregate;
  // Per option, the proven decryption shares used.
  std::vector<std::vector<crypto::ProvenDecryptionShare>> shares;
  Tally tally;

  Bytes encode() const;
  static Bulletin decode(std::span<const std::uint8_t> bytes);
};

/// Everything a voter checks: key derivation from the dealings, its own
/// ballot's presence, every ballot proof, the aggregate, every decryption
/// proof and the combination. Returns the first failure, nullopt if sound.
std::optional<std::string> verify_bulletin(const crypto::Group& group,
                                           const Bulletin& bulletin,
                                           std::size_t threshold,
                                           std::size_t options,
                                           const crypto::PublicKey& used_key,
                                           PeerId voter,
                                           const Bytes& own_ballot);

struct HeliosOutcome {
  RunResult run;
  std::int64_t verification_failures = 0;
};

BehaviorRegistry helios_behaviors(const crypto::Group& group);

HeliosOutcome run_helios(const HeliosConfig& config,
                         std::span<const std::size_t> choices,
                         const FaultModel& faults, std::uint64_t seed);

// Full mesh ------------------------------------------------------------------

inline constexpr std::uint64_t kMeshModulus = (std::uint64_t{1} << 61) - 1;

/// n additive shares of the unit vector e_choice, each a vector of d scalars
/// mod kMeshModulus.
std::vector<std::vector<std::uint64_t>> mesh_split(std::size_t choice,
                                                   std::size_t d, std::size_t n,
                                                   Rng& rng);
std::vector<std::uint64_t> mesh_sum(
    std::span<const std::vector<std::uint64_t>> parts, std::size_t d);

struct MeshParams {
  std::size_t n = 0;
  std::size_t d = 2;
  void validate() const;
};

struct MeshOutcome {
  RunResult run;
  // Adversary view: shares each peer received, keyed by sender.
  std::map<PeerId, std::map<PeerId, std::vector<std::uint64_t>>> received;
};

MeshOutcome run_mesh(const MeshParams& params,
                     std::span<const std::size_t> choices,
                     const FaultModel& faults, std::uint64_t seed,
                     Tick max_ticks = 1'000'000);

}  // namespace distvote
