#pragma once

// JSON scenario files.
//
//   {
//     "schema": "distvote.scenario/1",
//     "protocol": "dpol" | "spp" | "helios" | "chainvote" | "mesh",
//     "n": 16, "d": 2,
//     "params": { "k": 1, "audit": false, "cluster_size": 4, "t": 3,
//                 "trustees": 3, "difficulty": 8, "cutoff_height": 0,
//                 "mesh_degree": 4, "rsa_bits": 1024, "hash_budget": 0,
//                 "patience": 0, "group": "standard" | "tiny" },
//     "choices": [0, 1, ...] | { "distribution": [0.5, 0.5] },
//     "faults": { "crashed": [], "drop_probability": 0.0,
//                 "drop_phases": [], "byzantine": { "3": "dpol:silent" },
//                 "lost_messages": [],
//                 "max_delay": 4 },
//     "seed": 1,
//     "max_ticks": 1000000,
//     "output": "out/"
//   }
//
// Only "schema", "protocol" and "n" are required. Parameters a protocol does
// not use are rejected.

#include <optional>
#include <string>
#include <vector>

#include "distvote/analysis.hpp"
#include "distvote/run.hpp"

namespace distvote {

inline constexpr std::string_view kScenarioSchema = "distvote.scenario/1";

/// A schema violation; the message starts with the offending field path.
class ScenarioParseError : public ConfigError {
 public:
  ScenarioParseError(const std::string& path, const std::string& what)
      : ConfigError(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Protocol { dpol, spp, helios, chainvote, mesh };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view name);

struct ProtocolParams {
  std::optional<std::size_t> k;
  std::optional<bool> audit;
  std::optional<std::size_t> cluster_size;
  std::optional<std::size_t> t;
  std::optional<std::size_t> trustees;
  std::optional<unsigned> difficulty;
  std::optional<std::uint64_t> cutoff_height;
  std::optional<std::size_t> mesh_degree;
  std::optional<std::size_t> rsa_bits;
  std::optional<std::uint64_t> hash_budget;
  std::optional<Tick> patience;
  std::optional<std::string> group;
  bool operator==(const ProtocolParams&) const = default;
};

struct Scenario {
  Protocol protocol = Protocol::dpol;
  std::size_t n = 0;
  std::size_t d = 2;
  ProtocolParams params;
  std::vector<std::size_t> choices;    // explicit, or
  std::vector<double> distribution;    // drawn with the scenario seed
  FaultModel faults;
  std::uint64_t seed = 1;
  Tick max_ticks = 1'000'000;
  std::optional<std::string> output;

  /// Explicit choices, or a seeded draw from the distribution (uniform when
  /// neither is given).
  std::vector<std::size_t> resolved_choices() const;
  /// Checks everything the chosen protocol requires, without running it.
  void validate() const;
  std::string to_json() const;
};

bool operator==(const FaultModel& a, const FaultModel& b);
bool operator==(const Scenario& a, const Scenario& b);

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);

/// Honest defaults used by table1 and sweep.
Scenario canonical_scenario(Protocol protocol, std::size_t n,
                            std::uint64_t seed);

struct ScenarioResult {
  RunResult run;
  std::optional<TaxonomyRow> row;  // for complete runs
  std::vector<std::size_t> choices;
};

ScenarioResult run_scenario(const Scenario& scenario);

/// One-line CSV summary (with header) of a scenario run.
std::string render_report_csv(const Scenario& scenario,
                              const ScenarioResult& result);

}  // namespace distvote
