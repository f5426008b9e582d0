// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "distvote/analysis.hpp"
#include "distvote/baselines.hpp"
#include "distvote/chainvote.hpp"
#include "distvote/commands.hpp"
#include "distvote/crypto/ballot_proof.hpp"
#include "distvote/crypto/blind.hpp"
#include "distvote/crypto/threshold.hpp"
#include "distvote/dpol.hpp"
#include "distvote/scenario.hpp"
#include "distvote/spp.hpp"
#include "oracles.hpp"

using namespace distvote;
namespace cr = distvote::crypto;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_.push_back(what);
  }
  std::size_t checks() const { return checks_; }
  Verdict verdict(const std::string& summary) const {
    Verdict v;
    v.pass = failures_ == 0;
    std::ostringstream s;
    s << summary << " (" << checks_ - failures_ << "/" << checks_ << " checks)";
    for (const auto& n : notes_) s << "; " << n;
    v.detail = s.str();
    return v;
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

std::string str(const Tally& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t[i]);
  }
  return s + "]";
}

std::vector<std::size_t> draw_choices(std::size_t n, std::size_t d,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> out(n);
  for (auto& c : out) c = rng.below(d);
  return out;
}

// Every honest voter holds the oracle tally.
bool exact(const RunResult& run, const Tally& expected) {
  if (!run.complete()) return false;
  auto t = run.agreed_tally();
  return t && *t == expected;
}

// Determinism registry: every simulated scenario records a fingerprint and a
// way to recompute it.
struct Replay {
  std::string label;
  std::string fingerprint;
  std::function<std::string()> rerun;
};
std::vector<Replay> g_replays;

std::string fingerprint(const RunResult& run) {
  return to_hex(sha256(run.trace.to_jsonl() + "\n" + run.outcome_json()));
}

template <typename F>
auto tracked(const std::string& label, F f) {
  auto out = f();
  g_replays.push_back(
      {label, fingerprint(out.run), [f] { return fingerprint(f().run); }});
  return out;
}

// 1 -------------------------------------------------------------------------

Verdict criterion1() {
  Check c;
  const auto expected = expected_table1();
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    auto t = table1(seed);
    c.expect(t.matches, "seed " + std::to_string(seed) + " mismatch:\n" +
                            render_table_text(t.rows));
    for (std::size_t i = 0; i < expected.size(); ++i) {
      c.expect(t.rows[i].same_category(expected[i]),
               "seed " + std::to_string(seed) + " row " + expected[i].protocol);
    }
    auto text = render_table_text(t.rows);
    g_replays.push_back({"table1 seed " + std::to_string(seed),
                         to_hex(sha256(text + render_table_csv(t.rows))),
                         [seed] {
                           auto r = table1(seed);
                           return to_hex(sha256(render_table_text(r.rows) +
                                                render_table_csv(r.rows)));
                         }});
  }
  return c.verdict("table1 over seeds 1-4 matches all five rows");
}

// 2 -------------------------------------------------------------------------

Verdict criterion2() {
  Check c;
  std::size_t runs = 0;
  std::vector<std::string> infeasible;

  for (std::size_t n : {9, 16, 25}) {
    for (std::size_t d : {2, 3}) {
      // Smallest privacy parameter the encoding allows.
      const std::size_t k = d - 1;
      DpolParams params{n, k, d};
      bool feasible = true;
      try {
        params.validate();
      } catch (const ConfigError&) {
        feasible = false;
      }
      const bool predicted = 2 * k + 1 <= *exact_sqrt(n);
      c.expect(feasible == predicted,
               "dpol n=" + std::to_string(n) + " d=" + std::to_string(d) +
                   " feasibility disagrees with 2k+1 <= sqrt(n)");
      if (!feasible) {
        // The run itself must refuse, never produce a tally.
        bool refused = false;
        try {
          DpolConfig cfg{params, false, 1'000'000};
          run_dpol(cfg, draw_choices(n, d, 1), {}, 1);
        } catch (const ConfigError&) {
          refused = true;
        }
        c.expect(refused, "dpol infeasible point ran");
        infeasible.push_back("(" + std::to_string(n) + "," + std::to_string(d) + ")");
        continue;
      }
      for (std::uint64_t seed : {1, 2}) {
        auto choices = draw_choices(n, d, seed * 100 + n + d);
        auto out = tracked("dpol grid", [=] {
          DpolConfig cfg{DpolParams{n, k, d}, false, 1'000'000};
          return run_dpol(cfg, choices, {}, seed);
        });
        ++runs;
        c.expect(exact(out.run, oracle::histogram(choices, d)),
                 "dpol n=" + std::to_string(n) + " d=" + std::to_string(d));
      }
    }
  }

  for (auto protocol : {Protocol::spp, Protocol::chainvote, Protocol::helios,
                        Protocol::mesh}) {
    for (std::size_t n : {16, 28, 64}) {
      for (std::size_t d : {2, 3}) {
        auto s = canonical_scenario(protocol, n, 7 + n + d);
        s.d = d;
        s.choices = draw_choices(n, d, 31 * n + d);
        auto out = tracked(std::string(to_string(protocol)) + " grid",
                           [s] { return run_scenario(s); });
        ++runs;
        c.expect(exact(out.run, oracle::histogram(s.choices, d)),
                 std::string(to_string(protocol)) + " n=" + std::to_string(n) +
                     " d=" + std::to_string(d) + " got " +
                     (out.run.agreed_tally() ? str(*out.run.agreed_tally()) : "none"));
      }
    }
  }
  std::string note = std::to_string(runs) + " honest runs exact";
  if (!infeasible.empty()) {
    note += "; dpol grid points";
    for (const auto& p : infeasible) note += " " + p;
    note += " rejected as infeasible (k=d-1 gives 2k+1 > sqrt(n))";
  }
  return c.verdict(note);
}

// 3 -------------------------------------------------------------------------

Verdict criterion3() {
  Check c;
  std::size_t cases = 0;
  for (std::size_t d : {2, 3, 5}) {
    for (std::size_t k = 1; k <= 4; ++k) {
      if (k % (d - 1) != 0) continue;
      for (std::size_t n = 1; n <= 25; ++n) {
        for (std::uint64_t trial = 0; trial < 3; ++trial) {
          const std::uint64_t seed = (d * 100 + k) * 1000 + n * 10 + trial;
          auto choices = draw_choices(n, d, seed);
          DpolParams params{n, k, d};
          Tally aggregate(d, 0);
          for (std::size_t i = 0; i < n; ++i) {
            auto set = encode_shares(choices[i], params, seed + i + 1,
                                     static_cast<PeerId>(i));
            for (const auto& s : set.shares) aggregate = add(aggregate, s);
          }
          const auto truth = oracle::histogram(choices, d);
          const auto brute = oracle::dpol_decode_brute_force(aggregate, n, k);
          Tally decoded;
          try {
            decoded = decode_tally(aggregate, params);
          } catch (const std::exception& e) {
            decoded.clear();
          }
          ++cases;
          c.expect(brute && *brute == truth && decoded == truth,
                   "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                       " d=" + std::to_string(d));
        }
      }
    }
  }
  return c.verdict(std::to_string(cases) +
                   " random histograms, decode equals brute force and direct count");
}

// 4 -------------------------------------------------------------------------

Verdict criterion4() {
  Check c;
  const auto& g = cr::Group::standard();
  Rng rng(4004);
  std::size_t subsets = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t holders = 1 + rng.below(6);
    const std::size_t t = 1 + rng.below(holders);
    auto key = cr::threshold_keygen(t, holders, g, rng.next());
    const std::int64_t m = static_cast<std::int64_t>(rng.below(50));
    auto ct = cr::encrypt(g, key.pk, m, g.random_scalar(rng));
    std::vector<cr::DecryptionShare> all;
    for (const auto& s : key.shares) all.push_back(cr::partial_decrypt(g, s, ct));

    for (std::uint32_t mask = 0; mask < (1u << holders); ++mask) {
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      if (size != t && size + 1 != t) continue;
      std::vector<cr::DecryptionShare> subset;
      for (std::size_t i = 0; i < holders; ++i) {
        if (mask & (1u << i)) subset.push_back(all[i]);
      }
      ++subsets;
      if (size == t) {
        std::int64_t got = -1;
        try {
          got = cr::combine(g, subset, t, ct, 64);
        } catch (const std::exception&) {
        }
        c.expect(got == m, "t-subset failed to decrypt");
      } else {
        bool refused = false;
        try {
          cr::combine(g, subset, t, ct, 64);
        } catch (const cr::InsufficientShares&) {
          refused = true;
        }
        c.expect(refused, "(t-1)-subset did not error");
        // Interpolating the short subset as if it were complete must not
        // reveal the plaintext either.
        if (!subset.empty()) {
          bool leaked = false;
          try {
            leaked = cr::combine(g, subset, size, ct, 64) == m;
          } catch (const std::exception&) {
          }
          c.expect(!leaked, "(t-1)-subset recovered the plaintext");
        }
      }
    }
  }
  return c.verdict("200 instances, " + std::to_string(subsets) +
                   " t- and (t-1)-subsets");
}

// 5 -------------------------------------------------------------------------

cr::BallotProof honest_bit_proofs(const cr::Group& g, const cr::PublicKey& pk,
                                  const cr::CiphertextVector& cts,
                                  const std::vector<int>& claimed,
                                  const std::vector<mpz_class>& rs, Rng& rng) {
  auto ctx = cr::ballot_context(pk, cts);
  cr::BallotProof proof;
  for (std::size_t i = 0; i < cts.size(); ++i) {
    proof.components.push_back(cr::prove_bit(g, pk, cts[i], claimed[i], rs[i], ctx, rng));
  }
  // Sum proof over the product, claiming it encrypts 1.
  mpz_class a = 1, b = 1, r = 0;
  for (std::size_t i = 0; i < cts.size(); ++i) {
    a = g.mul(a, cts[i].a);
    b = g.mul(b, cts[i].b);
    r += rs[i];
  }
  proof.sum = cr::prove_dleq(g, "distvote/ballot-sum/v1", g.g, a, pk.h,
                             g.div(b, g.g), g.scalar(r), rng, ctx);
  return proof;
}

cr::Ciphertext encrypt_exponent(const cr::Group& g, const cr::PublicKey& pk,
                                const mpz_class& m, const mpz_class& r) {
  return {g.pow_g(r), g.mul(g.pow_g(m), g.exp(pk.h, r))};
}

Verdict criterion5() {
  Check c;
  const auto& g = cr::Group::standard();
  Rng rng(5005);
  cr::PublicKey pk{g.pow_g(g.random_scalar(rng))};

  std::size_t honest = 0;
  std::vector<cr::EncryptedBallot> pool;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + rng.below(3);
    auto b = cr::prove_ballot(g, pk, rng.below(d), d, rng);
    ++honest;
    c.expect(cr::verify_ballot(g, pk, b.ciphertexts, b.proof), "honest ballot rejected");
    if (pool.size() < 120) pool.push_back(std::move(b));
  }

  std::size_t malformed = 0;
  auto reject = [&](const cr::CiphertextVector& cts, const cr::BallotProof& p,
                    const std::string& kind) {
    ++malformed;
    c.expect(!cr::verify_ballot(g, pk, cts, p), kind + " accepted");
  };

  // Two-hot: two components encrypt 1; the bit proofs are honest.
  for (int i = 0; i < 110; ++i) {
    const std::size_t d = 2 + rng.below(3);
    const std::size_t x = rng.below(d);
    std::size_t y = rng.below(d - 1);
    if (y >= x) ++y;
    cr::CiphertextVector cts;
    std::vector<mpz_class> rs;
    std::vector<int> bits;
    for (std::size_t j = 0; j < d; ++j) {
      rs.push_back(g.random_scalar(rng));
      bits.push_back(j == x || j == y);
      cts.push_back(cr::encrypt(g, pk, bits.back(), rs.back()));
    }
    reject(cts, honest_bit_proofs(g, pk, cts, bits, rs, rng), "two-hot");
  }

  // Out of range: components (2, -1, 0...) sum to 1, so only the bit proofs
  // can catch them; or a single component encrypting a value above 1.
  for (int i = 0; i < 110; ++i) {
    const std::size_t d = 2 + rng.below(3);
    cr::CiphertextVector cts;
    std::vector<mpz_class> rs;
    std::vector<int> bits;
    const bool balanced = i % 2 == 0;
    for (std::size_t j = 0; j < d; ++j) {
      rs.push_back(g.random_scalar(rng));
      mpz_class m = 0;
      if (balanced && j == 0) m = 2;
      if (balanced && j == 1) m = g.q - 1;
      if (!balanced && j == 0) m = 2 + rng.below(5);
      bits.push_back(j == 0 ? 1 : 0);
      cts.push_back(encrypt_exponent(g, pk, m, rs.back()));
    }
    reject(cts, honest_bit_proofs(g, pk, cts, bits, rs, rng), "out-of-range");
  }

  // Transcript tampering on honest ballots.
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& b = pool[i];
    auto p = b.proof;
    auto cts = b.ciphertexts;
    switch (i % 8) {
      case 0: p.components[0].challenge[0] += 1; break;
      case 1: p.components.back().response[1] += 1; break;
      case 2: p.components[0].commit_a[1] = g.mul(p.components[0].commit_a[1], g.g); break;
      case 3: p.sum.response += 1; break;
      case 4: p.sum.commit2 = g.mul(p.sum.commit2, g.g); break;
      case 5: std::swap(cts[0], cts[1]); break;
      case 6: cts[0].a = g.mul(cts[0].a, g.g); break;
      case 7: p.components.pop_back(); break;
    }
    reject(cts, p, "tampered #" + std::to_string(i % 8));
    // A proof bound to one key never verifies under another.
    cr::PublicKey other{g.pow_g(g.random_scalar(rng))};
    ++malformed;
    c.expect(!cr::verify_ballot(g, other, b.ciphertexts, b.proof), "wrong key accepted");
  }
  return c.verdict(std::to_string(honest) + " honest proofs verify, " +
                   std::to_string(malformed) + " malformed ballots reject");
}

// 6 -------------------------------------------------------------------------

Verdict criterion6() {
  Check c;
  Rng rng(6006);
  cr::Issuer issuer(cr::generate_rsa(1024, rng));
  std::vector<std::uint32_t> voters(100);
  for (std::uint32_t i = 0; i < 100; ++i) voters[i] = i;
  auto tokens = cr::issue_tokens(voters, issuer, 6006);
  c.expect(tokens.size() == 100, "not every voter received a token");
  c.expect(issuer.transcript().size() == 100, "transcript size");

  std::set<mpz_class> seen;
  for (const auto& e : issuer.transcript()) {
    seen.insert(e.blinded);
    seen.insert(e.blinded_signature);
  }
  std::size_t overlaps = 0;
  for (const auto& [id, t] : tokens) {
    c.expect(cr::verify_token(t, issuer.public_key()), "token does not verify");
    const mpz_class m = cr::mpz_from_bytes(t.serial);
    const mpz_class hm = cr::full_domain_hash(t.serial, issuer.public_key());
    const bool hit = seen.contains(m) || seen.contains(hm) || seen.contains(t.signature);
    overlaps += hit;
    c.expect(!hit, "token value appears in the issuer transcript");
  }
  return c.verdict("100 issuances, " + std::to_string(overlaps) +
                   " transcript matches, all tokens verify");
}

// 7 -------------------------------------------------------------------------

Verdict criterion7() {
  Check c;
  std::ostringstream note;
  struct Case {
    Protocol protocol;
    std::vector<std::size_t> ns;
    double target;
    double tolerance;
    std::function<std::uint64_t(std::size_t)> oracle;
  };
  const std::vector<Case> cases = {
      {Protocol::mesh, {8, 16, 32, 64}, 2.0, 0.1,
       [](std::size_t n) { return oracle::mesh_messages(n); }},
      {Protocol::dpol, {16, 64, 256}, 1.5, 0.2,
       [](std::size_t n) { return oracle::dpol_messages(n, 1); }},
      {Protocol::spp, {16, 32, 64, 128}, 1.0, 0.2,
       [](std::size_t n) { return oracle::spp_messages(n, 4, 3); }},
  };
  for (const auto& k : cases) {
    auto result = sweep(k.protocol, k.ns, 1, 77);
    std::vector<std::pair<double, double>> analytic;
    for (const auto& p : result.points) {
      const auto expected = k.oracle(p.n);
      analytic.emplace_back(static_cast<double>(p.n), static_cast<double>(expected));
      c.expect(p.messages == static_cast<double>(expected),
               std::string(to_string(k.protocol)) + " n=" + std::to_string(p.n) +
                   " messages " + std::to_string(p.messages) + " != " +
                   std::to_string(expected));
    }
    const double oracle_slope = oracle::loglog_slope(analytic);
    c.expect(std::abs(result.fit.exponent - k.target) <= k.tolerance,
             std::string(to_string(k.protocol)) + " exponent " +
                 std::to_string(result.fit.exponent));
    c.expect(std::abs(oracle_slope - result.fit.exponent) < 1e-9,
             "fit disagrees with the analytic slope");
    note << to_string(k.protocol) << " " << std::fixed;
    note.precision(3);
    note << result.fit.exponent << " ";
  }
  return c.verdict("fitted exponents " + note.str() + "(counts equal analytic oracles)");
}

// 8 -------------------------------------------------------------------------

Verdict criterion8() {
  Check c;
  std::ostringstream note;
  note.precision(4);
  for (auto [n, k] : std::vector<std::pair<std::size_t, std::size_t>>{{16, 1}, {25, 2}}) {
    const std::uint64_t seed = 8000 + k;
    auto probe = dpol_recipient_probe({n, k, 2}, 1, 2000, seed);
    const double target = static_cast<double>(k + 1) / static_cast<double>(2 * k + 1);
    c.expect(std::abs(probe.accuracy - target) <= 0.05,
             "k=" + std::to_string(k) + " accuracy " + std::to_string(probe.accuracy));
    note << "k=" << k << " " << probe.accuracy << " (target " << target << ") ";
    const auto fp = std::to_string(probe.correct);
    g_replays.push_back({"leakage probe k=" + std::to_string(k), fp, [n, k, seed] {
                           return std::to_string(
                               dpol_recipient_probe({n, k, 2}, 1, 2000, seed).correct);
                         }});
  }
  return c.verdict("2000 trials each: " + note.str());
}

// 9 -------------------------------------------------------------------------

Verdict criterion9() {
  Check c;
  std::ostringstream note;

  // Hub crash.
  for (std::uint64_t seed : {1, 2}) {
    auto out = tracked("helios hub crash", [seed] {
      HeliosConfig cfg;
      cfg.params.n = 16;
      FaultModel f;
      f.crashed = {cfg.params.hub()};
      return run_helios(cfg, draw_choices(16, 2, seed), f, seed);
    });
    c.expect(out.run.completion == 0.0, "helios completion with hub crashed");
    c.expect(out.run.tallies.empty(), "helios tally without a hub");
  }
  note << "helios hub crash completion 0; ";

  // 20% crashes on a mesh that stays connected.
  std::size_t chain_runs = 0;
  const std::size_t n = 25;
  for (std::uint64_t seed = 1; chain_runs < 5 && seed < 100; ++seed) {
    const ChainParams params{.n = n};
    auto mesh = build_gossip_mesh(n, params.mesh_degree, sub_seed(seed, "chain/mesh"));
    Rng pick(seed * 7919);
    std::vector<PeerId> ids(n);
    for (PeerId i = 0; i < n; ++i) ids[i] = i;
    pick.shuffle(ids);
    std::set<PeerId> crashed(ids.begin(), ids.begin() + n / 5);
    const PeerId start = ids[n / 5];
    if (reachable_count(mesh, start, crashed) != n - crashed.size()) continue;
    ++chain_runs;
    auto choices = draw_choices(n, 2, seed);
    auto out = tracked("chain 20% crash", [=] {
      ChainConfig cfg{params, 1'000'000};
      FaultModel f;
      f.crashed = crashed;
      return run_chain(cfg, choices, f, seed);
    });
    std::vector<std::size_t> cast;
    for (PeerId i = 0; i < n; ++i) {
      if (!crashed.contains(i)) cast.push_back(choices[i]);
    }
    c.expect(out.run.completion == 1.0,
             "chain completion " + std::to_string(out.run.completion));
    c.expect(exact(out.run, oracle::histogram(cast, 2)), "chain survivor tally");
  }
  c.expect(chain_runs == 5, "could not find connected residual meshes");
  note << chain_runs << " chain runs with 5/25 crashed complete and exact; ";

  // Single message loss in DPol.
  Rng placement(9009);
  std::size_t incomplete = 0, wrong = 0, placements = 0;
  const std::size_t total = oracle::dpol_messages(16, 1);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const MessageId lost = 1 + placement.below(total);
    auto choices = draw_choices(16, 2, seed + 500);
    auto out = tracked("dpol single loss", [=] {
      DpolConfig cfg{DpolParams{16, 1, 2}, false, 1'000'000};
      FaultModel f;
      f.lost_messages = {lost};
      return run_dpol(cfg, choices, f, seed);
    });
    ++placements;
    const auto truth = oracle::histogram(choices, 2);
    bool silent_wrong = false;
    for (const auto& [peer, t] : out.run.tallies) silent_wrong |= t != truth;
    wrong += silent_wrong;
    c.expect(!silent_wrong, "dpol emitted a wrong tally, lost message " +
                                std::to_string(lost));
    const bool all_hold = out.run.tallies.size() == out.run.honest_voters.size();
    // Anyone left without a tally must show up as an incomplete run.
    c.expect(all_hold || !out.run.complete(), "missing tally not flagged");
    incomplete += !out.run.complete();
  }
  note << "dpol " << placements << " single losses: " << wrong << " wrong tallies, "
       << incomplete << " flagged incomplete";
  return c.verdict(note.str());
}

// 10 ------------------------------------------------------------------------

Verdict criterion10() {
  Check c;
  std::ostringstream note;

  // SPP: one lying aggregator in every cluster.
  std::size_t spp_runs = 0;
  for (std::size_t n : {16, 28}) {
    for (std::uint64_t seed : {1, 2}) {
      auto choices = draw_choices(n, 2, seed + n);
      auto out = tracked("spp lying aggregators", [=] {
        SppConfig cfg;
        cfg.params = {n, 4, 3, 2};
        auto overlay = build_tree_clusters(n, 4, sub_seed(seed, "spp/overlay"));
        FaultModel f;
        Rng pick(seed);
        for (const auto& cl : overlay.clusters) {
          f.byzantine[cl[pick.below(cl.size())]] = "spp:lying-aggregate";
        }
        return run_spp(cfg, choices, f, seed);
      });
      ++spp_runs;
      c.expect(exact(out.run, oracle::histogram(choices, 2)),
               "spp n=" + std::to_string(n) + " tally with lying aggregators");
    }
  }
  note << spp_runs << " spp runs exact; ";

  // Chainvote: 25 runs with 4 double-spenders each.
  std::size_t attempts = 0, counted_once = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const std::size_t n = 12;
    auto choices = draw_choices(n, 2, seed + 1000);
    Rng pick(seed + 77);
    std::vector<PeerId> ids(n);
    for (PeerId i = 0; i < n; ++i) ids[i] = i;
    pick.shuffle(ids);
    std::set<PeerId> spenders(ids.begin(), ids.begin() + 4);
    auto out = tracked("chain double spend", [=] {
      ChainConfig cfg{ChainParams{.n = n}, 1'000'000};
      FaultModel f;
      for (auto p : spenders) f.byzantine[p] = "chain:double-spend";
      return run_chain(cfg, choices, f, seed);
    });
    std::map<Digest, int> uses;
    for (const auto& [tx, proposer] : out.confirmed) uses[tx.token.serial]++;
    for (auto p : spenders) {
      ++attempts;
      auto it = out.tokens.find(p);
      const bool once = it != out.tokens.end() && uses[it->second.serial] == 1;
      counted_once += once;
      c.expect(once, "double-spend by peer " + std::to_string(p) + " not counted once");
    }
    bool all_once = true;
    for (const auto& [serial, count] : uses) all_once &= count == 1;
    c.expect(all_once && uses.size() == n, "some token counted twice or missing");
    auto t = out.run.agreed_tally();
    c.expect(t && (*t)[0] + (*t)[1] == static_cast<std::int64_t>(n),
             "tally does not count one vote per token");
  }
  note << counted_once << "/" << attempts << " double-spends counted once; ";

  // DPol audit.
  std::size_t audit_runs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = seed % 2 ? 25 : 16;
    Rng pick(seed + 9);
    std::vector<PeerId> ids(n);
    for (PeerId i = 0; i < n; ++i) ids[i] = i;
    pick.shuffle(ids);
    std::set<PeerId> bad(ids.begin(), ids.begin() + 1 + pick.below(3));
    auto choices = draw_choices(n, 2, seed + 2000);
    auto out = tracked("dpol audit", [=] {
      DpolConfig cfg{DpolParams{n, 1, 2}, true, 1'000'000};
      FaultModel f;
      for (auto p : bad) f.byzantine[p] = "dpol:invalid-shares";
      return run_dpol(cfg, choices, f, seed);
    });
    ++audit_runs;
    c.expect(out.run.flagged == bad, "audit flagged set differs from injected set");
  }
  note << audit_runs << " dpol audit runs flag exactly the injected peers";
  return c.verdict(note.str());
}

// 11 ------------------------------------------------------------------------

Verdict criterion11() {
  Check c;
  for (const auto& r : g_replays) {
    c.expect(r.rerun() == r.fingerprint, r.label + " differs on rerun");
  }
  // Scenario reports through the command layer.
  auto s = canonical_scenario(Protocol::dpol, 16, 11);
  auto a = run_scenario(s);
  auto b = run_scenario(s);
  c.expect(render_report_csv(s, a) == render_report_csv(s, b), "report differs");
  c.expect(a.run.trace.to_jsonl() == b.run.trace.to_jsonl(), "trace differs");
  return c.verdict(std::to_string(g_replays.size()) +
                   " recorded scenarios rerun byte-identical");
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const std::vector<std::function<Verdict()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL")
              << " - " << v.detail << " [" << std::fixed;
    std::cout.precision(1);
    std::cout << secs << "s]" << std::endl;
    failed += !v.pass;
  }
  std::cout << (failed ? "acceptance: FAIL" : "acceptance: PASS") << " ("
            << criteria.size() - failed << "/" << criteria.size()
            << " criteria)" << std::endl;
  return failed ? 1 : 0;
}
