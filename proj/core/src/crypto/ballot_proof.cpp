#include "distvote/crypto/ballot_proof.hpp"

namespace distvote::crypto {

namespace {

constexpr std::string_view kBitDomain = "distvote/bit-proof/v1";
constexpr std::string_view kSumDomain = "distvote/ballot-sum/v1";

mpz_class dleq_challenge(const Group& group, std::string_view domain,
                         const mpz_class& g1, const mpz_class& h1,
                         const mpz_class& g2, const mpz_class& h2,
                         const mpz_class& c1, const mpz_class& c2,
                         std::span<const std::uint8_t> context) {
  ByteWriter w;
  w.field(context);
  for (const auto* x : {&g1, &h1, &g2, &h2, &c1, &c2}) write_mpz(w, *x);
  return group.hash_to_scalar(domain, w.bytes());
}

mpz_class bit_challenge(const Group& group, const PublicKey& pk,
                        const Ciphertext& c, const BitProof& p,
                        std::span<const std::uint8_t> context) {
  ByteWriter w;
  w.field(context);
  write_mpz(w, pk.h);
  write_ciphertext(w, c);
  for (int j = 0; j < 2; ++j) {
    write_mpz(w, p.commit_a[j]);
    write_mpz(w, p.commit_b[j]);
  }
  return group.hash_to_scalar(kBitDomain, w.bytes());
}

bool in_range(const Group& group, const mpz_class& scalar) {
  return scalar >= 0 && scalar < group.q;
}

}  // namespace

DleqProof prove_dleq(const Group& group, std::string_view domain,
                     const mpz_class& g1, const mpz_class& h1,
                     const mpz_class& g2, const mpz_class& h2,
                     const mpz_class& witness, Rng& rng,
                     std::span<const std::uint8_t> context) {
  mpz_class w = group.random_scalar(rng);
  DleqProof p;
  p.commit1 = group.exp(g1, w);
  p.commit2 = group.exp(g2, w);
  p.challenge =
      dleq_challenge(group, domain, g1, h1, g2, h2, p.commit1, p.commit2,
                     context);
  p.response = group.scalar(w + p.challenge * witness);
  return p;
}

bool verify_dleq(const Group& group, std::string_view domain,
                 const mpz_class& g1, const mpz_class& h1,
                 const mpz_class& g2, const mpz_class& h2,
                 const DleqProof& p, std::span<const std::uint8_t> context) {
  if (!in_range(group, p.challenge) || !in_range(group, p.response)) {
    return false;
  }
  if (!group.is_member(p.commit1) || !group.is_member(p.commit2)) return false;
  if (p.challenge != dleq_challenge(group, domain, g1, h1, g2, h2, p.commit1,
                                    p.commit2, context)) {
    return false;
  }
  // g1^z == commit1 * h1^c and g2^z == commit2 * h2^c
  return group.exp(g1, p.response) ==
             group.mul(p.commit1, group.exp(h1, p.challenge)) &&
         group.exp(g2, p.response) ==
             group.mul(p.commit2, group.exp(h2, p.challenge));
}

BitProof prove_bit(const Group& group, const PublicKey& pk,
                   const Ciphertext& c, int bit, const mpz_class& randomness,
                   std::span<const std::uint8_t> context, Rng& rng) {
  if (bit != 0 && bit != 1) throw CryptoError("prove_bit: bit must be 0 or 1");
  const int real = bit;
  const int fake = 1 - bit;
  BitProof p;

  // Simulated branch: pick challenge and response, solve for commitments.
  p.challenge[fake] = group.random_scalar(rng);
  p.response[fake] = group.random_scalar(rng);
  const mpz_class b_over_gj =
      group.div(c.b, group.pow_g(mpz_class(fake)));
  p.commit_a[fake] = group.div(group.pow_g(p.response[fake]),
                               group.exp(c.a, p.challenge[fake]));
  p.commit_b[fake] = group.div(group.exp(pk.h, p.response[fake]),
                               group.exp(b_over_gj, p.challenge[fake]));

  const mpz_class w = group.random_scalar(rng);
  p.commit_a[real] = group.pow_g(w);
  p.commit_b[real] = group.exp(pk.h, w);

  const mpz_class total = bit_challenge(group, pk, c, p, context);
  p.challenge[real] = group.scalar(total - p.challenge[fake]);
  p.response[real] = group.scalar(w + p.challenge[real] * randomness);
  return p;
}

bool verify_bit(const Group& group, const PublicKey& pk, const Ciphertext& c,
                const BitProof& p, std::span<const std::uint8_t> context) {
  for (int j = 0; j < 2; ++j) {
    if (!in_range(group, p.challenge[j]) || !in_range(group, p.response[j])) {
      return false;
    }
    if (!group.is_member(p.commit_a[j]) || !group.is_member(p.commit_b[j])) {
      return false;
    }
  }
  const mpz_class total = bit_challenge(group, pk, c, p, context);
  if (group.scalar(p.challenge[0] + p.challenge[1]) != total) return false;
  for (int j = 0; j < 2; ++j) {
    const mpz_class b_over_gj = group.div(c.b, group.pow_g(mpz_class(j)));
    if (group.pow_g(p.response[j]) !=
        group.mul(p.commit_a[j], group.exp(c.a, p.challenge[j]))) {
      return false;
    }
    if (group.exp(pk.h, p.response[j]) !=
        group.mul(p.commit_b[j], group.exp(b_over_gj, p.challenge[j]))) {
      return false;
    }
  }
  return true;
}

Bytes ballot_context(const PublicKey& pk, const CiphertextVector& cts) {
  ByteWriter w;
  write_mpz(w, pk.h);
  write_ciphertexts(w, cts);
  return std::move(w).bytes();
}

EncryptedBallot prove_ballot(const Group& group, const PublicKey& pk,
                             std::size_t choice, std::size_t options,
                             Rng& rng) {
  if (options == 0 || choice >= options) {
    throw CryptoError("prove_ballot: choice out of range");
  }
  EncryptedBallot out;
  std::vector<mpz_class> rs;
  mpz_class r_total = 0;
  for (std::size_t j = 0; j < options; ++j) {
    rs.push_back(group.random_scalar(rng));
    r_total += rs.back();
    out.ciphertexts.push_back(
        encrypt(group, pk, j == choice ? 1 : 0, rs.back()));
  }
  const Bytes ctx = ballot_context(pk, out.ciphertexts);
  for (std::size_t j = 0; j < options; ++j) {
    ByteWriter cw;
    cw.field(ctx).u32(static_cast<std::uint32_t>(j));
    out.proof.components.push_back(prove_bit(group, pk, out.ciphertexts[j],
                                             j == choice ? 1 : 0, rs[j],
                                             cw.bytes(), rng));
  }
  Ciphertext sum = identity_ciphertext();
  for (const auto& c : out.ciphertexts) sum = hom_add(group, sum, c);
  out.proof.sum = prove_dleq(group, kSumDomain, group.g, sum.a, pk.h,
                             group.div(sum.b, group.g), group.scalar(r_total),
                             rng, ctx);
  return out;
}

bool verify_ballot(const Group& group, const PublicKey& pk,
                   const CiphertextVector& cts, const BallotProof& proof) {
  try {
    if (cts.empty() || proof.components.size() != cts.size()) return false;
    for (const auto& c : cts) {
      if (!group.is_member(c.a) || !group.is_member(c.b)) return false;
    }
    const Bytes ctx = ballot_context(pk, cts);
    for (std::size_t j = 0; j < cts.size(); ++j) {
      ByteWriter cw;
      cw.field(ctx).u32(static_cast<std::uint32_t>(j));
      if (!verify_bit(group, pk, cts[j], proof.components[j], cw.bytes())) {
        return false;
      }
    }
    Ciphertext sum = identity_ciphertext();
    for (const auto& c : cts) sum = hom_add(group, sum, c);
    return verify_dleq(group, kSumDomain, group.g, sum.a, pk.h,
                       group.div(sum.b, group.g), proof.sum, ctx);
  } catch (const std::exception&) {
    return false;
  }
}

void write_dleq(ByteWriter& w, const DleqProof& p) {
  write_mpz(w, p.commit1);
  write_mpz(w, p.commit2);
  write_mpz(w, p.challenge);
  write_mpz(w, p.response);
}

DleqProof read_dleq(ByteReader& r) {
  DleqProof p;
  p.commit1 = read_mpz(r);
  p.commit2 = read_mpz(r);
  p.challenge = read_mpz(r);
  p.response = read_mpz(r);
  return p;
}

void write_ballot_proof(ByteWriter& w, const BallotProof& p) {
  w.u32(static_cast<std::uint32_t>(p.components.size()));
  for (const auto& bp : p.components) {
    for (int j = 0; j < 2; ++j) {
      write_mpz(w, bp.commit_a[j]);
      write_mpz(w, bp.commit_b[j]);
      write_mpz(w, bp.challenge[j]);
      write_mpz(w, bp.response[j]);
    }
  }
  write_dleq(w, p.sum);
}

BallotProof read_ballot_proof(ByteReader& r) {
  BallotProof p;
  auto n = r.u32();
  if (n > (1u << 16)) throw DecodeError("implausible proof count");
  for (std::uint32_t i = 0; i < n; ++i) {
    BitProof bp;
    for (int j = 0; j < 2; ++j) {
      bp.commit_a[j] = read_mpz(r);
      bp.commit_b[j] = read_mpz(r);
      bp.challenge[j] = read_mpz(r);
      bp.response[j] = read_mpz(r);
    }
    p.components.push_back(std::move(bp));
  }
  p.sum = read_dleq(r);
  return p;
}

Bytes encode(const EncryptedBallot& b) {
  ByteWriter w;
  write_ciphertexts(w, b.ciphertexts);
  write_ballot_proof(w, b.proof);
  return std::move(w).bytes();
}

EncryptedBallot decode_ballot(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  EncryptedBallot b;
  b.ciphertexts = read_ciphertexts(r);
  b.proof = read_ballot_proof(r);
  r.expect_done();
  return b;
}

}  // namespace distvote::crypto
