#include "distvote/ballot.hpp"

#include "distvote/overlay.hpp"

namespace distvote {

void DpolParams::validate_encoding() const {
  if (d < 2) throw ConfigError("d must be >= 2");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k % (d - 1) != 0) {
    throw ConfigError("k must be divisible by d-1 (k=" + std::to_string(k) +
                      ", d=" + std::to_string(d) + ")");
  }
}

void DpolParams::validate() const {
  validate_encoding();
  auto side = exact_sqrt(n);
  if (!side || n < 4) {
    throw ConfigError("n must be a perfect square >= 4 (got " +
                      std::to_string(n) + ")");
  }
  if (fanout() > *side) {
    throw ConfigError("2k+1 = " + std::to_string(fanout()) +
                      " exceeds cluster size sqrt(n) = " +
                      std::to_string(*side));
  }
}

BallotVector unit_vector(std::size_t index, std::size_t d) {
  BallotVector v(d, 0);
  v.at(index) = 1;
  return v;
}

ShareSet encode_shares(std::size_t choice, const DpolParams& params,
                       std::uint64_t seed, PeerId owner) {
  params.validate_encoding();
  if (choice >= params.d) throw ConfigError("choice out of range");
  ShareSet out;
  out.owner = owner;
  for (std::size_t i = 0; i < params.k + 1; ++i) {
    out.shares.push_back(unit_vector(choice, params.d));
  }
  for (std::size_t j = 0; j < params.d; ++j) {
    if (j == choice) continue;
    for (std::size_t i = 0; i < params.other_copies(); ++i) {
      out.shares.push_back(unit_vector(j, params.d));
    }
  }
  Rng rng(seed);
  rng.shuffle(out.shares);
  return out;
}

Tally decode_tally(std::span<const std::int64_t> aggregate,
                   const DpolParams& params) {
  params.validate_encoding();
  if (aggregate.size() != params.d) {
    throw InconsistentAggregate("aggregate has wrong dimension");
  }
  const auto n = static_cast<std::int64_t>(params.n);
  const auto m = static_cast<std::int64_t>(params.other_copies());
  const auto scale = static_cast<std::int64_t>(params.k) + 1 - m;
  std::int64_t total = 0;
  for (auto t : aggregate) {
    if (t < 0) throw InconsistentAggregate("negative aggregate component");
    total += t;
  }
  if (total != static_cast<std::int64_t>(params.fanout()) * n) {
    throw InconsistentAggregate("aggregate sum " + std::to_string(total) +
                                " != (2k+1)n");
  }
  Tally counts;
  std::int64_t sum = 0;
  for (auto t : aggregate) {
    const std::int64_t shifted = t - m * n;
    if (shifted < 0 || shifted % scale != 0) {
      throw InconsistentAggregate("non-integral or negative option count");
    }
    counts.push_back(shifted / scale);
    sum += counts.back();
  }
  if (sum != n) throw InconsistentAggregate("option counts do not sum to n");
  return counts;
}

std::string_view to_string(AuditVerdict v) {
  switch (v) {
    case AuditVerdict::valid: return "valid";
    case AuditVerdict::invalid: return "invalid";
    case AuditVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

AuditVerdict audit_share_set(std::span<const BallotVector> shares,
                             const DpolParams& params) {
  params.validate_encoding();
  if (shares.size() < params.fanout()) return AuditVerdict::inconclusive;
  if (shares.size() > params.fanout()) return AuditVerdict::invalid;
  std::vector<std::size_t> counts(params.d, 0);
  for (const auto& s : shares) {
    if (s.size() != params.d) return AuditVerdict::invalid;
    std::size_t ones = 0, at = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] > 1) return AuditVerdict::invalid;
      if (s[j] == 1) {
        ++ones;
        at = j;
      }
    }
    if (ones != 1) return AuditVerdict::invalid;
    ++counts[at];
  }
  std::size_t major = 0;
  for (std::size_t j = 0; j < params.d; ++j) {
    if (counts[j] == params.k + 1) {
      ++major;
    } else if (counts[j] != params.other_copies()) {
      return AuditVerdict::invalid;
    }
  }
  return major == 1 ? AuditVerdict::valid : AuditVerdict::invalid;
}

Tally add(Tally acc, std::span<const std::uint8_t> v) {
  if (acc.size() != v.size()) throw std::invalid_argument("dimension mismatch");
  for (std::size_t j = 0; j < v.size(); ++j) acc[j] += v[j];
  return acc;
}

Tally histogram(std::span<const std::size_t> choices, std::size_t d) {
  Tally h(d, 0);
  for (auto c : choices) h.at(c) += 1;
  return h;
}

}  // namespace distvote
