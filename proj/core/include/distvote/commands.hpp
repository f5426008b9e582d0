#pragma once

// The command implementations behind the distvote executable.
//
// Exit codes: 0 complete / matching, 1 configuration error, 2 incomplete run,
// 3 taxonomy table mismatch.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "distvote/analysis.hpp"
#include "distvote/scenario.hpp"

namespace distvote {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitIncomplete = 2;
inline constexpr int kExitMismatch = 3;

struct Table1Run {
  std::vector<TaxonomyRow> rows;  // dpol, spp, helios, chainvote, paper-based
  std::vector<ScenarioResult> results;
  bool matches = false;
};

/// Runs the canonical honest scenarios and classifies them. A forced fault
/// (a behavior id such as "spp:silent-root") is applied to every voter of the
/// protocol that registers it.
Table1Run table1(std::uint64_t seed,
                 const std::optional<std::string>& forced_fault = {});

struct SweepPoint {
  std::size_t n = 0;
  double messages = 0;
  double bytes = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  ComplexityFit fit;
};

SweepResult sweep(Protocol protocol, const std::vector<std::size_t>& ns,
                  std::size_t repeats, std::uint64_t seed);

std::string render_sweep_csv(const SweepResult& result);

int command_run(const std::string& scenario_path,
                std::optional<std::uint64_t> seed,
                std::optional<std::string> out_dir, std::ostream& out,
                std::ostream& err);

int command_table1(std::uint64_t seed, const std::optional<std::string>& out_dir,
                   const std::optional<std::string>& forced_fault,
                   std::ostream& out, std::ostream& err);

int command_sweep(const std::string& protocol,
                  const std::vector<std::size_t>& ns, std::size_t repeats,
                  std::uint64_t seed, const std::optional<std::string>& out_dir,
                  std::ostream& out, std::ostream& err);

}  // namespace distvote
