#include "distvote/crypto/elgamal.hpp"

#include <cmath>
#include <map>

namespace distvote::crypto {

Ciphertext encrypt(const Group& group, const PublicKey& pk, std::int64_t m,
                   const mpz_class& randomness) {
  if (m < 0) throw CryptoError("negative plaintext");
  mpz_class mm = static_cast<unsigned long>(m);
  return Ciphertext{group.pow_g(randomness),
                    group.mul(group.pow_g(mm), group.exp(pk.h, randomness))};
}

Ciphertext identity_ciphertext() { return Ciphertext{1, 1}; }

Ciphertext hom_add(const Group& group, const Ciphertext& x,
                   const Ciphertext& y) {
  return Ciphertext{group.mul(x.a, y.a), group.mul(x.b, y.b)};
}

CiphertextVector hom_add(const Group& group, const CiphertextVector& x,
                         const CiphertextVector& y) {
  if (x.size() != y.size()) throw CryptoError("ciphertext vector mismatch");
  CiphertextVector out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.push_back(hom_add(group, x[i], y[i]));
  }
  return out;
}

mpz_class decrypt_to_element(const Group& group, const mpz_class& secret,
                             const Ciphertext& c) {
  return group.div(c.b, group.exp(c.a, secret));
}

std::int64_t decrypt(const Group& group, const mpz_class& secret,
                     const Ciphertext& c, std::int64_t bound) {
  return dlog_recover(group, decrypt_to_element(group, secret, c), bound);
}

std::int64_t dlog_recover(const Group& group, const mpz_class& element,
                          std::int64_t bound) {
  if (bound < 0) throw CryptoError("negative dlog bound");
  const auto step = static_cast<std::int64_t>(
      std::ceil(std::sqrt(static_cast<double>(bound) + 1.0)));
  // Baby steps: g^j for j in [0, step).
  std::map<mpz_class, std::int64_t> baby;
  mpz_class cur = 1;
  for (std::int64_t j = 0; j < step; ++j) {
    baby.emplace(cur, j);
    cur = group.mul(cur, group.g);
  }
  // Giant steps: element * g^{-step*i}.
  const mpz_class giant = group.inv(group.pow_g(mpz_class(
      static_cast<unsigned long>(step))));
  mpz_class gamma = element;
  for (std::int64_t i = 0; i * step <= bound; ++i) {
    if (auto it = baby.find(gamma); it != baby.end()) {
      std::int64_t m = i * step + it->second;
      if (m <= bound) return m;
      break;
    }
    gamma = group.mul(gamma, giant);
  }
  throw PlaintextOutOfRange();
}

void write_ciphertext(ByteWriter& w, const Ciphertext& c) {
  write_mpz(w, c.a);
  write_mpz(w, c.b);
}

Ciphertext read_ciphertext(ByteReader& r) {
  Ciphertext c;
  c.a = read_mpz(r);
  c.b = read_mpz(r);
  return c;
}

void write_ciphertexts(ByteWriter& w, const CiphertextVector& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& c : v) write_ciphertext(w, c);
}

CiphertextVector read_ciphertexts(ByteReader& r) {
  auto n = r.u32();
  if (n > (1u << 16)) throw DecodeError("implausible ciphertext count");
  CiphertextVector v;
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(read_ciphertext(r));
  return v;
}

Bytes encode(const CiphertextVector& v) {
  ByteWriter w;
  write_ciphertexts(w, v);
  return std::move(w).bytes();
}

}  // namespace distvote::crypto
