#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distvote/ballot.hpp"
#include "distvote/overlay.hpp"
#include "distvote/simnet.hpp"

namespace distvote {

/// Everything a protocol run leaves behind: the trace, the role log the
/// analysis module classifies, and each voter's final tally.
struct RunResult {
  std::string protocol;
  Trace trace;
  RoleLog roles;
  Overlay overlay;
  std::vector<PeerId> voters;
  // Voters that were neither crashed nor byzantine; completion and agreement
  // are measured over these.
  std::vector<PeerId> honest_voters;
  std::map<PeerId, Tally> tallies;
  std::set<PeerId> flagged;
  RunStatus status;
  double completion = 0.0;
  std::map<std::string, std::int64_t> counters;
  std::vector<std::string> diagnostics;

  bool complete() const { return status.quiescent && completion >= 1.0; }
  /// The common tally if every honest voter holds the same one.
  std::optional<Tally> agreed_tally() const;
  std::size_t message_count() const { return trace.count(EventKind::send); }

  std::string outcome_json() const;
};

/// Fills honest_voters and completion from the simulator state.
void finalize_run(RunResult& result, const Simulator& sim);

std::uint64_t sub_seed(std::uint64_t seed, std::string_view purpose);

}  // namespace distvote
