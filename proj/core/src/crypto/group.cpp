#include "distvote/crypto/group.hpp"

namespace distvote::crypto {

namespace {

Group make_standard() {
  Group g;
  g.q = mpz_class(
      "0xd2db9299d1e8e1ba02ae66617b21822c70b50ecb32ccd896361424b1ea125e79");
  g.p = mpz_class(
      "0xce4d4657532564368979a63384736ccc6c6522692d61e71a8b85122c4e6b9781"
      "b8dabfa29d9afa25f8930015d6a25f25700b432c814017cbefeda7bd9f9c13ac"
      "8f1fb9b2cd424a1bef10d0c57413017f9a13c872bb591f65c9600f3d09c142d7"
      "afab4c89d57dc968e89e33cd1283946276d1c09b26fb9e815d30f660eead92e9");
  g.g = mpz_class(
      "0xb6f67444617944c94d0091e12ab303c93a88d1ad59d1fea92819e64cb2090e75"
      "72ba82d88251c7c5781ec3609ea1a92e3d2b9077539cd38e739af8b8b8486ec1"
      "7481a7e7bf4cb34458b7c314a53a8e7a78da38f9b0a359cec555bbbbb2c7832c"
      "c588e162a36057b0bfbf2d8a077e12180e366f5f5a93f99d04fe26117205d4c4");
  g.validate();
  return g;
}

Group make_tiny() {
  Group g;
  g.q = 65633;
  g.p = 131267;
  g.g = 4;  // a quadratic residue, hence of order q
  g.validate();
  return g;
}

}  // namespace

const Group& Group::standard() {
  static const Group group = make_standard();
  return group;
}

const Group& Group::tiny() {
  static const Group group = make_tiny();
  return group;
}

mpz_class Group::exp(const mpz_class& base, const mpz_class& e) const {
  mpz_class out;
  mpz_class ee = scalar(e);
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), ee.get_mpz_t(), p.get_mpz_t());
  return out;
}

mpz_class Group::mul(const mpz_class& a, const mpz_class& b) const {
  mpz_class out = a * b;
  mpz_mod(out.get_mpz_t(), out.get_mpz_t(), p.get_mpz_t());
  return out;
}

mpz_class Group::inv(const mpz_class& a) const {
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), p.get_mpz_t()) == 0) {
    throw CryptoError("group element not invertible");
  }
  return out;
}

mpz_class Group::scalar(const mpz_class& x) const {
  mpz_class out;
  mpz_mod(out.get_mpz_t(), x.get_mpz_t(), q.get_mpz_t());
  return out;
}

bool Group::is_member(const mpz_class& x) const {
  if (x <= 0 || x >= p) return false;
  mpz_class out;
  mpz_powm(out.get_mpz_t(), x.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  return out == 1;
}

mpz_class Group::random_scalar(Rng& rng) const {
  // 64 extra bits make the modular reduction bias negligible.
  Bytes buf((mpz_sizeinbase(q.get_mpz_t(), 2) + 7) / 8 + 8);
  rng.fill(buf);
  return scalar(mpz_from_bytes(buf));
}

mpz_class Group::hash_to_scalar(std::string_view domain,
                                std::span<const std::uint8_t> data) const {
  ByteWriter w;
  w.field(domain).field(data);
  auto d = sha256(w.bytes());
  return scalar(mpz_from_bytes(d));
}

void Group::validate() const {
  if (mpz_probab_prime_p(p.get_mpz_t(), 30) == 0 ||
      mpz_probab_prime_p(q.get_mpz_t(), 30) == 0) {
    throw CryptoError("group modulus or order is not prime");
  }
  mpz_class rem = (p - 1) % q;
  if (rem != 0) throw CryptoError("q does not divide p-1");
  if (g == 1 || !is_member(g)) throw CryptoError("g is not of order q");
}

mpz_class mpz_from_bytes(std::span<const std::uint8_t> big_endian) {
  mpz_class out;
  if (!big_endian.empty()) {
    mpz_import(out.get_mpz_t(), big_endian.size(), 1, 1, 1, 0,
               big_endian.data());
  }
  return out;
}

Bytes mpz_to_bytes(const mpz_class& x) {
  if (x < 0) throw CryptoError("cannot encode negative integer");
  if (x == 0) return {};
  Bytes out((mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, x.get_mpz_t());
  out.resize(written);
  return out;
}

void write_mpz(ByteWriter& w, const mpz_class& x) { w.field(mpz_to_bytes(x)); }

mpz_class read_mpz(ByteReader& r) {
  auto f = r.field();
  if (!f.empty() && f.front() == 0) {
    throw DecodeError("non-canonical integer encoding");
  }
  return mpz_from_bytes(f);
}

}  // namespace distvote::crypto
