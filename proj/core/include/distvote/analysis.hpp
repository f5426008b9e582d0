#pragma once

// Trace analysis: taxonomy classification, message-complexity fits, privacy
// probes and robustness reports.

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distvote/ballot.hpp"
#include "distvote/chainvote.hpp"
#include "distvote/run.hpp"

namespace distvote {

enum class Specialisation {
  none,
  none_flexible,
  random_authorities,
  selected_authorities,
};

enum class Topology { centralised, structured_tree, structured_ring, distributed };

std::string_view to_string(Specialisation s);
std::string_view to_string(Topology t);

struct TaxonomyRow {
  std::string protocol;
  bool classifiable = true;
  Specialisation specialisation = Specialisation::none;
  Topology topology = Topology::distributed;
  // Non-registration phases in which voters are equipotent.
  std::set<Phase> distributed_phases;
  bool all_phases = false;
  bool fully_distributed = false;
  std::vector<std::string> diagnostics;

  /// "all" or a comma-separated phase list ("-" when empty).
  std::string phases_label() const;
  /// Categorical equality (ignores diagnostics).
  bool same_category(const TaxonomyRow& other) const;
};

/// Classifies a finished run from its trace, role log and overlay.
///
/// specialisation  by the strongest role source seen outside registration:
///                 configured > seeded draw > self-selected; "none" needs
///                 every acting peer to hold the same role set
/// topology        centralised if one peer receives more than half of the
///                 casting and aggregation messages; structured if every
///                 non-registration message stays inside a cluster or crosses
///                 one declared ring/tree link; otherwise distributed
/// phases          a phase is distributed iff every honest voter performs an
///                 everyone-role action in it, nobody acts in it under a drawn
///                 or configured role, and no action in it relies on a peer
///                 that ever held such a role
TaxonomyRow classify(const RunResult& run);

/// Static reference row for paper ballots.
TaxonomyRow paper_based_row();

/// The expected categories, in table order: dpol, spp, helios, chainvote,
/// paper-based.
std::vector<TaxonomyRow> expected_table1();

std::string render_table_text(const std::vector<TaxonomyRow>& rows);
std::string render_table_csv(const std::vector<TaxonomyRow>& rows);

// Complexity ------------------------------------------------------------------

struct ComplexityFit {
  std::vector<std::pair<double, double>> points;  // (n, messages)
  double exponent = 0.0;
  double intercept = 0.0;  // natural-log scale
  double r2 = 0.0;
};

/// Least-squares slope of log(messages) against log(n). Needs at least three
/// distinct n values.
ComplexityFit fit_complexity(const std::vector<std::pair<double, double>>& points);

// Privacy ---------------------------------------------------------------------

struct ProbeResult {
  std::size_t trials = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double baseline = 0.0;  // accuracy of a blind guess
};

/// DPol: a coalition made of the target's first `coalition` recipients
/// guesses the target's choice by majority over the shares it received
/// (uniform among tied options). Each trial is a full seeded run with a
/// random target and random choices.
ProbeResult dpol_recipient_probe(const DpolParams& params,
                                 std::size_t coalition, std::size_t trials,
                                 std::uint64_t seed);

/// Blockchain: every peer including the issuer pools the issuance transcript
/// and the public chain and tries to link each confirmed token to the voter
/// it was issued to. Exact matches between transcript and token values are
/// used when present; otherwise the guess is uniform over voters.
ProbeResult chain_linkage_probe(const ChainParams& params, std::size_t runs,
                                std::uint64_t seed);

// Robustness ------------------------------------------------------------------

struct FaultLevel {
  std::string label;
  FaultModel faults;
};

struct RobustnessRow {
  std::string label;
  double completion = 0.0;
  // Every honest tally that exists equals the expected one.
  bool exact = true;
  bool complete = false;
  std::size_t flagged = 0;
};

/// Runs `runner` at each level; `expected` gives the tally of the ballots
/// that the level still allows to be cast.
std::vector<RobustnessRow> robustness_report(
    const std::vector<FaultLevel>& grid,
    const std::function<RunResult(const FaultModel&)>& runner,
    const std::function<Tally(const FaultModel&)>& expected);

std::string render_robustness_csv(const std::vector<RobustnessRow>& rows);

}  // namespace distvote
