#pragma once

// Non-interactive Chaum-Pedersen proofs (Fiat-Shamir over SHA-256):
//  - DLEQ: log_{g1} h1 == log_{g2} h2
//  - disjunctive: an ElGamal ciphertext encrypts 0 or 1
//  - ballot: every component encrypts 0 or 1 and the components sum to 1

#include <cstddef>
#include <string_view>
#include <vector>

#include "distvote/crypto/elgamal.hpp"

namespace distvote::crypto {

struct DleqProof {
  mpz_class commit1;  // g1^w
  mpz_class commit2;  // g2^w
  mpz_class challenge;
  mpz_class response;
  bool operator==(const DleqProof&) const = default;
};

DleqProof prove_dleq(const Group& group, std::string_view domain,
                     const mpz_class& g1, const mpz_class& h1,
                     const mpz_class& g2, const mpz_class& h2,
                     const mpz_class& witness, Rng& rng,
                     std::span<const std::uint8_t> context = {});
bool verify_dleq(const Group& group, std::string_view domain,
                 const mpz_class& g1, const mpz_class& h1,
                 const mpz_class& g2, const mpz_class& h2,
                 const DleqProof& proof,
                 std::span<const std::uint8_t> context = {});

/// Proof that a ciphertext encrypts a value in {0, 1}. Branch j carries the
/// commitments (g^w_j, h^w_j), challenge c_j and response z_j; the challenges
/// must add up to the transcript hash.
struct BitProof {
  mpz_class commit_a[2];
  mpz_class commit_b[2];
  mpz_class challenge[2];
  mpz_class response[2];
  bool operator==(const BitProof&) const = default;
};

struct BallotProof {
  std::vector<BitProof> components;
  DleqProof sum;  // product of components encrypts exactly 1
  bool operator==(const BallotProof&) const = default;
};

struct EncryptedBallot {
  CiphertextVector ciphertexts;
  BallotProof proof;
};

/// Encrypts the unit vector e_choice of length `options` and proves validity.
EncryptedBallot prove_ballot(const Group& group, const PublicKey& pk,
                             std::size_t choice, std::size_t options,
                             Rng& rng);

/// Proof for explicitly supplied plaintext bits and randomness. Used by
/// prove_ballot; exposed so tests can build malformed ballots whose
/// component proofs are honest.
BitProof prove_bit(const Group& group, const PublicKey& pk,
                   const Ciphertext& c, int bit, const mpz_class& randomness,
                   std::span<const std::uint8_t> context, Rng& rng);
bool verify_bit(const Group& group, const PublicKey& pk, const Ciphertext& c,
                const BitProof& proof, std::span<const std::uint8_t> context);

/// Transcript context binding every component proof to the whole ballot.
Bytes ballot_context(const PublicKey& pk, const CiphertextVector& cts);

/// Never throws; any inconsistency yields false.
bool verify_ballot(const Group& group, const PublicKey& pk,
                   const CiphertextVector& ciphertexts,
                   const BallotProof& proof);

void write_dleq(ByteWriter& w, const DleqProof& p);
DleqProof read_dleq(ByteReader& r);
void write_ballot_proof(ByteWriter& w, const BallotProof& p);
BallotProof read_ballot_proof(ByteReader& r);
Bytes encode(const EncryptedBallot& b);
EncryptedBallot decode_ballot(std::span<const std::uint8_t> bytes);

}  // namespace distvote::crypto
