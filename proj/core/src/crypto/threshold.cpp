#include "distvote/crypto/threshold.hpp"

#include <algorithm>
#include <set>

namespace distvote::crypto {

namespace {
constexpr std::string_view kPartialDomain = "distvote/partial-decrypt/v1";
}

FeldmanDealing deal(const Group& group, std::size_t threshold,
                    std::size_t holders, Rng& rng) {
  if (threshold < 1 || threshold > holders) {
    throw CryptoError("threshold must satisfy 1 <= t <= holders");
  }
  std::vector<mpz_class> coeffs;
  for (std::size_t k = 0; k < threshold; ++k) {
    coeffs.push_back(group.random_scalar(rng));
  }
  FeldmanDealing d;
  for (const auto& a : coeffs) d.commitments.push_back(group.pow_g(a));
  for (std::size_t i = 1; i <= holders; ++i) {
    // Horner evaluation of f(i) mod q.
    mpz_class acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      acc = group.scalar(acc * static_cast<unsigned long>(i) + *it);
    }
    d.shares.push_back(acc);
  }
  return d;
}

mpz_class commitment_at(const Group& group,
                        std::span<const mpz_class> commitments,
                        std::uint32_t index) {
  mpz_class acc = 1;
  mpz_class power = 1;  // index^k mod q
  for (const auto& c : commitments) {
    acc = group.mul(acc, group.exp(c, power));
    power = group.scalar(power * index);
  }
  return acc;
}

bool verify_dealt_share(const Group& group,
                        std::span<const mpz_class> commitments,
                        std::uint32_t index, const mpz_class& share) {
  return group.pow_g(share) == commitment_at(group, commitments, index);
}

ThresholdKey combine_dealings(const Group& group, std::size_t threshold,
                              std::span<const std::uint32_t> holder_ids,
                              std::span<const FeldmanDealing> dealings) {
  const std::size_t n = holder_ids.size();
  if (threshold < 1 || threshold > n) {
    throw CryptoError("threshold must satisfy 1 <= t <= holders");
  }
  ThresholdKey key;
  key.threshold = threshold;
  key.pk.h = 1;
  for (const auto& d : dealings) {
    if (d.commitments.size() != threshold || d.shares.size() != n) {
      throw CryptoError("dealing shape mismatch");
    }
    key.pk.h = group.mul(key.pk.h, d.commitments.front());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto index = static_cast<std::uint32_t>(i + 1);
    mpz_class x = 0;
    mpz_class vk = 1;
    for (const auto& d : dealings) {
      x += d.shares[i];
      vk = group.mul(vk, commitment_at(group, d.commitments, index));
    }
    key.shares.push_back(KeyShare{holder_ids[i], index, group.scalar(x)});
    key.verification_keys.push_back(vk);
  }
  return key;
}

ThresholdKey threshold_keygen(std::size_t threshold, std::size_t holders,
                              const Group& group, std::uint64_t seed) {
  if (threshold < 1 || threshold > holders) {
    throw CryptoError("threshold must satisfy 1 <= t <= holders (t=" +
                      std::to_string(threshold) +
                      ", holders=" + std::to_string(holders) + ")");
  }
  std::vector<std::uint32_t> ids;
  std::vector<FeldmanDealing> dealings;
  for (std::size_t i = 0; i < holders; ++i) {
    ids.push_back(static_cast<std::uint32_t>(i));
    Rng rng = Rng::derive(seed, i);
    dealings.push_back(deal(group, threshold, holders, rng));
  }
  return combine_dealings(group, threshold, ids, dealings);
}

DecryptionShare partial_decrypt(const Group& group, const KeyShare& share,
                                const Ciphertext& c) {
  return DecryptionShare{share.index, group.exp(c.a, share.value)};
}

mpz_class lagrange_at_zero(const Group& group,
                           std::span<const std::uint32_t> indices,
                           std::uint32_t index) {
  mpz_class num = 1;
  mpz_class den = 1;
  for (auto j : indices) {
    if (j == index) continue;
    num = group.scalar(num * j);
    den = group.scalar(den * (mpz_class(j) - index));
  }
  mpz_class inv;
  if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), group.q.get_mpz_t()) == 0) {
    throw CryptoError("duplicate share indices");
  }
  return group.scalar(num * inv);
}

std::int64_t combine(const Group& group,
                     std::span<const DecryptionShare> shares,
                     std::size_t threshold, const Ciphertext& c,
                     std::int64_t bound) {
  std::vector<DecryptionShare> sorted(shares.begin(), shares.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& x, const auto& y) { return x.index < y.index; });
  std::set<std::uint32_t> seen;
  for (const auto& s : sorted) {
    if (s.index == 0 || !seen.insert(s.index).second) {
      throw CryptoError("decryption shares must have distinct indices >= 1");
    }
  }
  if (threshold == 0 || sorted.size() < threshold) throw InsufficientShares();
  sorted.resize(threshold);

  std::vector<std::uint32_t> indices;
  for (const auto& s : sorted) indices.push_back(s.index);
  mpz_class ax = 1;  // a^x
  for (const auto& s : sorted) {
    ax = group.mul(ax, group.exp(s.value,
                                 lagrange_at_zero(group, indices, s.index)));
  }
  return dlog_recover(group, group.div(c.b, ax), bound);
}

ProvenDecryptionShare prove_partial_decrypt(const Group& group,
                                            const KeyShare& share,
                                            const Ciphertext& c, Rng& rng) {
  ProvenDecryptionShare out;
  out.share = partial_decrypt(group, share, c);
  out.proof = prove_dleq(group, kPartialDomain, group.g,
                         group.pow_g(share.value), c.a, out.share.value,
                         share.value, rng);
  return out;
}

bool verify_partial_decrypt(const Group& group,
                            const mpz_class& verification_key,
                            const Ciphertext& c,
                            const ProvenDecryptionShare& share) {
  try {
    return verify_dleq(group, kPartialDomain, group.g, verification_key, c.a,
                       share.share.value, share.proof);
  } catch (const std::exception&) {
    return false;
  }
}

void write_decryption_share(ByteWriter& w, const DecryptionShare& s) {
  w.u32(s.index);
  write_mpz(w, s.value);
}

DecryptionShare read_decryption_share(ByteReader& r) {
  DecryptionShare s;
  s.index = r.u32();
  s.value = read_mpz(r);
  return s;
}

}  // namespace distvote::crypto
