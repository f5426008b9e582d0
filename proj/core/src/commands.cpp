#include "distvote/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "distvote/crypto/group.hpp"

namespace distvote {

namespace {

constexpr std::size_t kTable1Voters = 16;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
}

std::optional<Protocol> owner_of_behavior(std::string_view id) {
  if (id.starts_with("dpol:")) return Protocol::dpol;
  if (id.starts_with("spp:")) return Protocol::spp;
  if (id.starts_with("helios:")) return Protocol::helios;
  if (id.starts_with("chain:")) return Protocol::chainvote;
  return std::nullopt;
}

}  // namespace

Table1Run table1(std::uint64_t seed,
                 const std::optional<std::string>& forced_fault) {
  std::optional<Protocol> faulted;
  if (forced_fault) {
    faulted = owner_of_behavior(*forced_fault);
    if (!faulted) {
      throw ConfigError("forced fault '" + *forced_fault +
                        "' does not name a protocol behavior");
    }
  }
  Table1Run out;
  for (auto p : {Protocol::dpol, Protocol::spp, Protocol::helios,
                 Protocol::chainvote}) {
    Scenario s = canonical_scenario(p, kTable1Voters, seed);
    if (faulted == p) {
      for (PeerId v = 0; v < s.n; ++v) s.faults.byzantine[v] = *forced_fault;
      if (p == Protocol::helios) s.faults.byzantine[s.n] = *forced_fault;
    }
    auto result = run_scenario(s);
    TaxonomyRow row = result.row ? *result.row : classify(result.run);
    row.protocol = std::string(to_string(p));
    out.rows.push_back(std::move(row));
    out.results.push_back(std::move(result));
  }
  out.rows.push_back(paper_based_row());
  const auto expected = expected_table1();
  out.matches = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (!out.rows[i].same_category(expected[i])) out.matches = false;
  }
  return out;
}

SweepResult sweep(Protocol protocol, const std::vector<std::size_t>& ns,
                  std::size_t repeats, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  std::set<std::size_t> distinct(ns.begin(), ns.end());
  if (distinct.size() < 3) {
    throw ConfigError("sweep needs at least three distinct n values");
  }
  SweepResult out;
  std::vector<std::pair<double, double>> fit_points;
  for (auto n : distinct) {
    SweepPoint point{n, 0, 0};
    for (std::size_t r = 0; r < repeats; ++r) {
      Scenario s = canonical_scenario(protocol, n,
                                      sub_seed(seed, "sweep/" + std::to_string(r)));
      auto result = run_scenario(s);
      if (!result.run.complete()) {
        throw ConfigError("sweep run for n=" + std::to_string(n) +
                          " did not complete");
      }
      point.messages += static_cast<double>(result.run.message_count());
      point.bytes += static_cast<double>(result.run.trace.sent_bytes());
    }
    point.messages /= static_cast<double>(repeats);
    point.bytes /= static_cast<double>(repeats);
    fit_points.emplace_back(static_cast<double>(n), point.messages);
    out.points.push_back(point);
  }
  out.fit = fit_complexity(fit_points);
  return out;
}

std::string render_sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "n,messages,bytes\n";
  for (const auto& p : result.points) {
    out << p.n << "," << p.messages << "," << p.bytes << "\n";
  }
  return out.str();
}

int command_run(const std::string& scenario_path,
                std::optional<std::uint64_t> seed,
                std::optional<std::string> out_dir, std::ostream& out,
                std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(scenario_path);
    if (seed) s.seed = *seed;
    if (!out_dir) out_dir = s.output;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  ScenarioResult result;
  try {
    result = run_scenario(s);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string report = render_report_csv(s, result);
  if (out_dir) {
    std::filesystem::path dir(*out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "trace.jsonl", result.run.trace.to_jsonl());
    write_file(dir / "outcome.json", result.run.outcome_json() + "\n");
    write_file(dir / "report.csv", report);
  }
  out << report;
  if (!result.run.complete()) {
    for (const auto& d : result.run.diagnostics) err << d << "\n";
    err << "run incomplete (completion " << result.run.completion << ")\n";
    return kExitIncomplete;
  }
  return kExitOk;
}

int command_table1(std::uint64_t seed, const std::optional<std::string>& out_dir,
                   const std::optional<std::string>& forced_fault,
                   std::ostream& out, std::ostream& err) {
  Table1Run t;
  try {
    t = table1(seed, forced_fault);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string text = render_table_text(t.rows);
  const std::string csv = render_table_csv(t.rows);
  if (out_dir) {
    std::filesystem::path dir(*out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "table1.txt", text);
    write_file(dir / "table1.csv", csv);
  }
  out << text;
  if (!t.matches) {
    const auto expected = expected_table1();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (t.rows[i].same_category(expected[i])) continue;
      err << "mismatch for " << t.rows[i].protocol << ": expected "
          << to_string(expected[i].specialisation) << " / "
          << to_string(expected[i].topology) << " / "
          << expected[i].phases_label() << "\n";
      for (const auto& d : t.rows[i].diagnostics) err << "  " << d << "\n";
    }
    return kExitMismatch;
  }
  return kExitOk;
}

int command_sweep(const std::string& protocol,
                  const std::vector<std::size_t>& ns, std::size_t repeats,
                  std::uint64_t seed, const std::optional<std::string>& out_dir,
                  std::ostream& out, std::ostream& err) {
  auto p = parse_protocol(protocol);
  if (!p) {
    err << "configuration error: unknown protocol '" << protocol << "'\n";
    return kExitConfig;
  }
  SweepResult result;
  try {
    result = sweep(*p, ns, repeats, seed);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string csv = render_sweep_csv(result);
  std::ostringstream fit;
  fit << "exponent,r2\n" << result.fit.exponent << "," << result.fit.r2 << "\n";
  if (out_dir) {
    std::filesystem::path dir(*out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "sweep.csv", csv);
    write_file(dir / "fit.csv", fit.str());
  }
  out << csv << "# exponent " << result.fit.exponent << " r2 " << result.fit.r2
      << "\n";
  return kExitOk;
}

}  // namespace distvote
