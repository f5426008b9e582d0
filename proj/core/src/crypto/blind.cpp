#include "distvote/crypto/blind.hpp"

namespace distvote::crypto {

namespace {

mpz_class random_prime(std::size_t bits, Rng& rng) {
  Bytes buf((bits + 7) / 8);
  rng.fill(buf);
  mpz_class x = mpz_from_bytes(buf);
  mpz_setbit(x.get_mpz_t(), bits - 1);
  mpz_setbit(x.get_mpz_t(), bits - 2);
  mpz_class p;
  mpz_nextprime(p.get_mpz_t(), x.get_mpz_t());
  return p;
}

}  // namespace

RsaKeyPair generate_rsa(std::size_t modulus_bits, Rng& rng) {
  if (modulus_bits < 256) throw CryptoError("RSA modulus too small");
  const mpz_class e = 65537;
  for (;;) {
    mpz_class p = random_prime(modulus_bits / 2, rng);
    mpz_class q = random_prime(modulus_bits - modulus_bits / 2, rng);
    if (p == q) continue;
    mpz_class phi = (p - 1) * (q - 1);
    mpz_class d;
    if (mpz_invert(d.get_mpz_t(), e.get_mpz_t(), phi.get_mpz_t()) == 0) {
      continue;
    }
    return RsaKeyPair{RsaPublicKey{p * q, e}, d};
  }
}

mpz_class full_domain_hash(const Digest& serial, const RsaPublicKey& pk) {
  const std::size_t bytes = (mpz_sizeinbase(pk.n.get_mpz_t(), 2) + 7) / 8 + 16;
  Bytes out;
  for (std::uint32_t counter = 0; out.size() < bytes; ++counter) {
    ByteWriter w;
    w.field("distvote/token-fdh/v1").u32(counter).digest(serial);
    auto block = sha256(w.bytes());
    out.insert(out.end(), block.begin(), block.end());
  }
  out.resize(bytes);
  mpz_class h = mpz_from_bytes(out);
  mpz_mod(h.get_mpz_t(), h.get_mpz_t(), pk.n.get_mpz_t());
  return h;
}

mpz_class random_blinding(const RsaPublicKey& pk, Rng& rng) {
  Bytes buf((mpz_sizeinbase(pk.n.get_mpz_t(), 2) + 7) / 8 + 8);
  for (;;) {
    rng.fill(buf);
    mpz_class r = mpz_from_bytes(buf);
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
    if (r > 1 && g == 1) return r;
  }
}

mpz_class blind(const Digest& serial, const RsaPublicKey& pk,
                const mpz_class& r) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  if (g != 1) throw CryptoError("blinding factor not coprime to N");
  mpz_class re;
  mpz_powm(re.get_mpz_t(), r.get_mpz_t(), pk.e.get_mpz_t(), pk.n.get_mpz_t());
  mpz_class out = full_domain_hash(serial, pk) * re;
  mpz_mod(out.get_mpz_t(), out.get_mpz_t(), pk.n.get_mpz_t());
  return out;
}

mpz_class sign_blinded(const mpz_class& blinded, const RsaKeyPair& keys) {
  mpz_class s;
  mpz_powm(s.get_mpz_t(), blinded.get_mpz_t(), keys.d.get_mpz_t(),
           keys.pub.n.get_mpz_t());
  return s;
}

Token unblind(const Digest& serial, const mpz_class& blinded_signature,
              const mpz_class& r, const RsaPublicKey& pk) {
  mpz_class rinv;
  if (mpz_invert(rinv.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t()) == 0) {
    throw CryptoError("blinding factor not invertible");
  }
  mpz_class s = blinded_signature * rinv;
  mpz_mod(s.get_mpz_t(), s.get_mpz_t(), pk.n.get_mpz_t());
  return Token{serial, s};
}

bool verify_token(const Token& token, const RsaPublicKey& pk) {
  if (token.signature <= 0 || token.signature >= pk.n) return false;
  mpz_class v;
  mpz_powm(v.get_mpz_t(), token.signature.get_mpz_t(), pk.e.get_mpz_t(),
           pk.n.get_mpz_t());
  return v == full_domain_hash(token.serial, pk);
}

void write_token(ByteWriter& w, const Token& t) {
  w.digest(t.serial);
  write_mpz(w, t.signature);
}

Token read_token(ByteReader& r) {
  Token t;
  t.serial = r.digest();
  t.signature = read_mpz(r);
  return t;
}

std::optional<mpz_class> Issuer::sign_request(std::uint32_t identity,
                                              const mpz_class& blinded) {
  if (served_[identity]) return std::nullopt;
  served_[identity] = true;
  mpz_class s = sign_blinded(blinded, keys_);
  transcript_.push_back(Entry{identity, blinded, s});
  return s;
}

std::map<std::uint32_t, Token> issue_tokens(
    const std::vector<std::uint32_t>& voters, Issuer& issuer,
    std::uint64_t seed) {
  std::map<std::uint32_t, Token> out;
  for (auto v : voters) {
    Rng rng = Rng::derive(seed, v);
    Digest serial{};
    rng.fill(serial);
    mpz_class r = random_blinding(issuer.public_key(), rng);
    auto sig = issuer.sign_request(v, blind(serial, issuer.public_key(), r));
    if (!sig) continue;
    out.emplace(v, unblind(serial, *sig, r, issuer.public_key()));
  }
  return out;
}

}  // namespace distvote::crypto
