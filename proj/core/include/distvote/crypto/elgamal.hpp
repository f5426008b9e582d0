#pragma once

// Exponential (additively homomorphic) ElGamal: E(m; r) = (g^r, g^m h^r).

#include <cstdint>
#include <vector>

#include "distvote/crypto/group.hpp"

namespace distvote::crypto {

struct PublicKey {
  mpz_class h;
  bool operator==(const PublicKey&) const = default;
};

struct Ciphertext {
  mpz_class a;  // g^r
  mpz_class b;  // g^m h^r
  bool operator==(const Ciphertext&) const = default;
};

using CiphertextVector = std::vector<Ciphertext>;

class PlaintextOutOfRange : public CryptoError {
 public:
  PlaintextOutOfRange() : CryptoError("plaintext out of range") {}
};

Ciphertext encrypt(const Group& group, const PublicKey& pk, std::int64_t m,
                   const mpz_class& randomness);
Ciphertext hom_add(const Group& group, const Ciphertext& x,
                   const Ciphertext& y);
/// Encryption of zero with randomness zero; neutral element of hom_add.
Ciphertext identity_ciphertext();
CiphertextVector hom_add(const Group& group, const CiphertextVector& x,
                         const CiphertextVector& y);

/// g^m given the secret key x, i.e. b / a^x.
mpz_class decrypt_to_element(const Group& group, const mpz_class& secret,
                             const Ciphertext& c);
std::int64_t decrypt(const Group& group, const mpz_class& secret,
                     const Ciphertext& c, std::int64_t bound);

/// Smallest m in [0, bound] with g^m = element (baby-step giant-step).
/// Throws PlaintextOutOfRange when none exists.
std::int64_t dlog_recover(const Group& group, const mpz_class& element,
                          std::int64_t bound);

void write_ciphertext(ByteWriter& w, const Ciphertext& c);
Ciphertext read_ciphertext(ByteReader& r);
void write_ciphertexts(ByteWriter& w, const CiphertextVector& v);
CiphertextVector read_ciphertexts(ByteReader& r);
Bytes encode(const CiphertextVector& v);

}  // namespace distvote::crypto
