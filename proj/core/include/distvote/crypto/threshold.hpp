#pragma once

// (t, n)-threshold exponential ElGamal. Keys come from a joint Feldman
// dealing (every holder deals a degree t-1 polynomial; shares are summed),
// modelled honest-but-curious: no complaint or disqualification rounds.

#include <cstdint>
#include <span>
#include <vector>

#include "distvote/crypto/ballot_proof.hpp"
#include "distvote/crypto/elgamal.hpp"

namespace distvote::crypto {

struct KeyShare {
  std::uint32_t holder = 0;  // peer id of the holder
  std::uint32_t index = 0;   // evaluation point, >= 1
  mpz_class value;           // f(index) mod q
};

struct FeldmanDealing {
  std::vector<mpz_class> commitments;  // g^{a_k}, k = 0..t-1
  std::vector<mpz_class> shares;       // shares[i-1] = f(i)
};

FeldmanDealing deal(const Group& group, std::size_t threshold,
                    std::size_t holders, Rng& rng);

/// g^{f(index)} from the public coefficient commitments.
mpz_class commitment_at(const Group& group,
                        std::span<const mpz_class> commitments,
                        std::uint32_t index);
bool verify_dealt_share(const Group& group,
                        std::span<const mpz_class> commitments,
                        std::uint32_t index, const mpz_class& share);

struct ThresholdKey {
  PublicKey pk;
  std::size_t threshold = 0;
  std::vector<KeyShare> shares;
  // g^{x_i} per share index; lets anyone check decryption shares.
  std::vector<mpz_class> verification_keys;
};

/// Sums the dealings of all holders. Holder i (0-based) gets index i+1.
ThresholdKey combine_dealings(const Group& group, std::size_t threshold,
                              std::span<const std::uint32_t> holder_ids,
                              std::span<const FeldmanDealing> dealings);

ThresholdKey threshold_keygen(std::size_t threshold, std::size_t holders,
                              const Group& group, std::uint64_t seed);

struct DecryptionShare {
  std::uint32_t index = 0;
  mpz_class value;  // a^{x_i}
  bool operator==(const DecryptionShare&) const = default;
};

class InsufficientShares : public CryptoError {
 public:
  InsufficientShares() : CryptoError("insufficient shares") {}
};

DecryptionShare partial_decrypt(const Group& group, const KeyShare& share,
                                const Ciphertext& c);

/// Lagrange coefficient of `index` for interpolation at zero over `indices`.
mpz_class lagrange_at_zero(const Group& group,
                           std::span<const std::uint32_t> indices,
                           std::uint32_t index);

/// Combines the `threshold` lowest-index shares and recovers m in [0, bound].
std::int64_t combine(const Group& group,
                     std::span<const DecryptionShare> shares,
                     std::size_t threshold, const Ciphertext& c,
                     std::int64_t bound);

/// Decryption share plus a DLEQ proof that log_g(vk) == log_a(share).
struct ProvenDecryptionShare {
  DecryptionShare share;
  DleqProof proof;
};

ProvenDecryptionShare prove_partial_decrypt(const Group& group,
                                            const KeyShare& share,
                                            const Ciphertext& c, Rng& rng);
bool verify_partial_decrypt(const Group& group,
                            const mpz_class& verification_key,
                            const Ciphertext& c,
                            const ProvenDecryptionShare& share);

void write_decryption_share(ByteWriter& w, const DecryptionShare& s);
DecryptionShare read_decryption_share(ByteReader& r);

}  // namespace distvote::crypto
