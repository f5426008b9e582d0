#pragma once

// RSA full-domain-hash blind signatures for unlinkable eligibility tokens.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "distvote/crypto/group.hpp"

namespace distvote::crypto {

struct RsaPublicKey {
  mpz_class n;
  mpz_class e;
  bool operator==(const RsaPublicKey&) const = default;
};

struct RsaKeyPair {
  RsaPublicKey pub;
  mpz_class d;
};

RsaKeyPair generate_rsa(std::size_t modulus_bits, Rng& rng);

/// H(m) in Z_N: SHA-256 in counter mode over the serial, reduced mod N.
mpz_class full_domain_hash(const Digest& serial, const RsaPublicKey& pk);

struct Token {
  Digest serial{};     // random 256-bit message
  mpz_class signature;  // s with s^e = H(serial) mod N
  bool operator==(const Token&) const = default;
};

mpz_class random_blinding(const RsaPublicKey& pk, Rng& rng);
mpz_class blind(const Digest& serial, const RsaPublicKey& pk,
                const mpz_class& r);
mpz_class sign_blinded(const mpz_class& blinded, const RsaKeyPair& keys);
Token unblind(const Digest& serial, const mpz_class& blinded_signature,
              const mpz_class& r, const RsaPublicKey& pk);
bool verify_token(const Token& token, const RsaPublicKey& pk);

void write_token(ByteWriter& w, const Token& t);
Token read_token(ByteReader& r);

/// Signs at most one blinded request per identity and keeps the full
/// transcript of what it saw and returned.
class Issuer {
 public:
  struct Entry {
    std::uint32_t identity;
    mpz_class blinded;
    mpz_class blinded_signature;
  };

  explicit Issuer(RsaKeyPair keys) : keys_(std::move(keys)) {}

  const RsaPublicKey& public_key() const { return keys_.pub; }
  /// nullopt when the identity has already been served.
  std::optional<mpz_class> sign_request(std::uint32_t identity,
                                        const mpz_class& blinded);
  const std::vector<Entry>& transcript() const { return transcript_; }

 private:
  RsaKeyPair keys_;
  std::vector<Entry> transcript_;
  std::map<std::uint32_t, bool> served_;
};

/// Registration without a network: every voter blinds a fresh serial, the
/// issuer signs, the voter unblinds. Refused identities are absent from the
/// result.
std::map<std::uint32_t, Token> issue_tokens(
    const std::vector<std::uint32_t>& voters, Issuer& issuer,
    std::uint64_t seed);

}  // namespace distvote::crypto
