#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string_view>

#include "distvote/bytes.hpp"
#include "distvote/rng.hpp"

namespace distvote::crypto {

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prime-order subgroup of Z_p^*: q | p-1, g generates the order-q subgroup.
struct Group {
  mpz_class p;
  mpz_class q;
  mpz_class g;

  /// 1024-bit p with a 256-bit q; used for protocol runs.
  static const Group& standard();
  /// Safe-prime group p = 2q+1 with q = 65633, for exhaustive tests.
  static const Group& tiny();

  mpz_class exp(const mpz_class& base, const mpz_class& e) const;
  mpz_class pow_g(const mpz_class& e) const { return exp(g, e); }
  mpz_class mul(const mpz_class& a, const mpz_class& b) const;
  mpz_class inv(const mpz_class& a) const;
  mpz_class div(const mpz_class& a, const mpz_class& b) const {
    return mul(a, inv(b));
  }
  mpz_class scalar(const mpz_class& x) const;  // x mod q, non-negative

  bool is_member(const mpz_class& x) const;
  mpz_class random_scalar(Rng& rng) const;

  /// Fiat-Shamir challenge: SHA-256(domain || data) reduced mod q.
  mpz_class hash_to_scalar(std::string_view domain,
                           std::span<const std::uint8_t> data) const;

  void validate() const;
};

void write_mpz(ByteWriter& w, const mpz_class& x);
mpz_class read_mpz(ByteReader& r);
mpz_class mpz_from_bytes(std::span<const std::uint8_t> big_endian);
Bytes mpz_to_bytes(const mpz_class& x);

}  // namespace distvote::crypto
