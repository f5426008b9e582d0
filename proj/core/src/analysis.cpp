#include "distvote/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "distvote/dpol.hpp"

namespace distvote {

std::string_view to_string(Specialisation s) {
  switch (s) {
    case Specialisation::none: return "none";
    case Specialisation::none_flexible: return "none-flexible";
    case Specialisation::random_authorities: return "random-authorities";
    case Specialisation::selected_authorities: return "selected-authorities";
  }
  return "?";
}

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::centralised: return "centralised";
    case Topology::structured_tree: return "structured-tree";
    case Topology::structured_ring: return "structured-ring";
    case Topology::distributed: return "distributed";
  }
  return "?";
}

std::string TaxonomyRow::phases_label() const {
  if (all_phases) return "all";
  if (distributed_phases.empty()) return "-";
  std::string out;
  for (auto p : distributed_phases) {
    if (!out.empty()) out += ",";
    out += to_string(p);
  }
  return out;
}

bool TaxonomyRow::same_category(const TaxonomyRow& o) const {
  if (classifiable != o.classifiable) return false;
  if (!classifiable) return true;
  return specialisation == o.specialisation && topology == o.topology &&
         all_phases == o.all_phases &&
         (all_phases || distributed_phases == o.distributed_phases) &&
         fully_distributed == o.fully_distributed;
}

namespace {

bool privileged_source(RoleSource s) {
  return s == RoleSource::configured || s == RoleSource::seeded_draw;
}

TaxonomyRow unclassifiable(std::string protocol, std::string why) {
  TaxonomyRow row;
  row.protocol = std::move(protocol);
  row.classifiable = false;
  row.diagnostics.push_back(std::move(why));
  return row;
}

bool adjacent(const Overlay& o, PeerId from, PeerId to) {
  if (from >= o.cluster_of.size() || to >= o.cluster_of.size()) return false;
  const auto a = o.cluster_of[from];
  const auto b = o.cluster_of[to];
  if (a == b) return true;
  const auto& la = o.links[a];
  const auto& lb = o.links[b];
  return std::find(la.begin(), la.end(), b) != la.end() ||
         std::find(lb.begin(), lb.end(), a) != lb.end();
}

}  // namespace

TaxonomyRow classify(const RunResult& run) {
  if (!run.complete()) {
    return unclassifiable(run.protocol, "incomplete run");
  }
  const auto& actions = run.roles.actions;

  std::set<Phase> present;
  for (const auto& a : actions) {
    if (a.phase != Phase::registration) present.insert(a.phase);
  }
  for (const auto& e : run.trace.events) {
    if (e.phase != Phase::registration) present.insert(e.phase);
  }
  if (present.empty()) {
    return unclassifiable(run.protocol, "no activity outside registration");
  }

  TaxonomyRow row;
  row.protocol = run.protocol;

  // Specialisation.
  std::set<RoleSource> sources;
  std::map<PeerId, std::set<std::string>> role_sets;
  for (const auto& a : actions) {
    if (a.phase == Phase::registration) continue;
    sources.insert(a.source);
    role_sets[a.peer].insert(a.role);
  }
  if (sources.contains(RoleSource::configured)) {
    row.specialisation = Specialisation::selected_authorities;
  } else if (sources.contains(RoleSource::seeded_draw)) {
    row.specialisation = Specialisation::random_authorities;
  } else if (sources.contains(RoleSource::self_selected)) {
    row.specialisation = Specialisation::none_flexible;
  } else {
    for (const auto& [peer, roles] : role_sets) {
      if (roles != role_sets.begin()->second) {
        return unclassifiable(run.protocol,
                              "peer " + std::to_string(peer) +
                                  " holds a different role set");
      }
    }
    row.specialisation = Specialisation::none;
  }

  // Topology.
  std::map<PeerId, std::size_t> inbound;
  std::size_t core_messages = 0;
  bool structured = run.overlay.kind == OverlayKind::ring_clusters ||
                    run.overlay.kind == OverlayKind::tree_clusters;
  for (const auto& e : run.trace.events) {
    if (e.kind != EventKind::send || !e.to) continue;
    if (e.phase == Phase::casting || e.phase == Phase::aggregation) {
      ++inbound[*e.to];
      ++core_messages;
    }
    if (e.phase != Phase::registration && structured &&
        !adjacent(run.overlay, e.from, *e.to)) {
      structured = false;
    }
  }
  std::size_t busiest = 0;
  for (const auto& [_, c] : inbound) busiest = std::max(busiest, c);
  if (core_messages > 0 && 2 * busiest > core_messages) {
    row.topology = Topology::centralised;
  } else if (structured) {
    row.topology = run.overlay.kind == OverlayKind::ring_clusters
                       ? Topology::structured_ring
                       : Topology::structured_tree;
  } else {
    row.topology = Topology::distributed;
  }

  // Distributed phases.
  std::set<PeerId> privileged;
  for (const auto& a : actions) {
    if (privileged_source(a.source)) privileged.insert(a.peer);
  }
  for (auto phase : present) {
    bool distributed = true;
    std::set<PeerId> performers;
    for (const auto& a : actions) {
      if (a.phase != phase) continue;
      if (privileged_source(a.source)) distributed = false;
      for (auto p : a.relies_on) {
        if (privileged.contains(p)) distributed = false;
      }
      if (a.source == RoleSource::everyone) performers.insert(a.peer);
    }
    for (auto v : run.honest_voters) {
      if (!performers.contains(v)) distributed = false;
    }
    if (distributed) row.distributed_phases.insert(phase);
  }
  row.all_phases = row.distributed_phases == present;
  row.fully_distributed =
      row.topology == Topology::distributed && row.all_phases;
  return row;
}

TaxonomyRow paper_based_row() {
  TaxonomyRow row;
  row.protocol = "paper-based";
  row.specialisation = Specialisation::none_flexible;
  row.topology = Topology::distributed;
  row.all_phases = true;
  row.fully_distributed = true;
  row.diagnostics.push_back("static reference row, not simulated");
  return row;
}

std::vector<TaxonomyRow> expected_table1() {
  auto make = [](std::string protocol, Specialisation s, Topology t,
                 std::set<Phase> phases, bool all) {
    TaxonomyRow row;
    row.protocol = std::move(protocol);
    row.specialisation = s;
    row.topology = t;
    row.distributed_phases = std::move(phases);
    row.all_phases = all;
    row.fully_distributed = all && t == Topology::distributed;
    return row;
  };
  return {
      make("dpol", Specialisation::none, Topology::structured_ring, {}, true),
      make("spp", Specialisation::random_authorities, Topology::structured_tree,
           {Phase::aggregation}, false),
      make("helios", Specialisation::selected_authorities,
           Topology::centralised, {Phase::verification}, false),
      make("chainvote", Specialisation::none_flexible, Topology::distributed,
           {}, true),
      paper_based_row(),
  };
}

std::string render_table_text(const std::vector<TaxonomyRow>& rows) {
  const std::vector<std::string> header = {"Protocol", "Degree of Specialisation",
                                           "Topology", "Distributed Phases"};
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows) {
    if (!r.classifiable) {
      cells.push_back({r.protocol, "unclassifiable", "-", "-"});
    } else {
      cells.push_back({r.protocol, std::string(to_string(r.specialisation)),
                       std::string(to_string(r.topology)), r.phases_label()});
    }
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      width[i] = std::max(width[i], line[i].size());
    }
  }
  std::ostringstream out;
  auto rule = [&] {
    for (std::size_t i = 0; i < width.size(); ++i) {
      out << (i ? "-+-" : "") << std::string(width[i], '-');
    }
    out << "\n";
  };
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (std::size_t i = 0; i < cells[l].size(); ++i) {
      out << (i ? " | " : "") << cells[l][i]
          << std::string(width[i] - cells[l][i].size(), ' ');
    }
    out << "\n";
    if (l == 0) rule();
  }
  return out.str();
}

std::string render_table_csv(const std::vector<TaxonomyRow>& rows) {
  std::ostringstream out;
  out << "protocol,specialisation,topology,distributed_phases,"
         "fully_distributed\n";
  for (const auto& r : rows) {
    if (!r.classifiable) {
      out << r.protocol << ",unclassifiable,,,\n";
      continue;
    }
    out << r.protocol << "," << to_string(r.specialisation) << ","
        << to_string(r.topology) << ",\"" << r.phases_label() << "\","
        << (r.fully_distributed ? "true" : "false") << "\n";
  }
  return out.str();
}

ComplexityFit fit_complexity(
    const std::vector<std::pair<double, double>>& points) {
  std::set<double> distinct;
  for (const auto& [n, m] : points) {
    if (n <= 0 || m <= 0) {
      throw std::invalid_argument("complexity points must be positive");
    }
    distinct.insert(n);
  }
  if (distinct.size() < 3) {
    throw std::invalid_argument("need at least three distinct n values");
  }
  ComplexityFit fit;
  fit.points = points;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(points.size());
  for (const auto& [n, m] : points) {
    const double x = std::log(n), y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  fit.intercept = (sy - fit.exponent * sx) / k;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / k;
  for (const auto& [n, m] : points) {
    const double y = std::log(m);
    const double pred = fit.intercept + fit.exponent * std::log(n);
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - mean) * (y - mean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

namespace {

constexpr std::size_t kMinTrials = 100;

}  // namespace

ProbeResult dpol_recipient_probe(const DpolParams& params,
                                 std::size_t coalition, std::size_t trials,
                                 std::uint64_t seed) {
  if (trials < kMinTrials) {
    throw std::invalid_argument("privacy probe needs at least 100 trials");
  }
  params.validate();
  if (coalition > params.fanout()) {
    throw std::invalid_argument("coalition larger than the recipient set");
  }
  ProbeResult result;
  result.trials = trials;
  result.baseline = 1.0 / static_cast<double>(params.d);
  Rng rng(seed);
  DpolConfig config{params, false, 1'000'000};
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::size_t> choices(params.n);
    for (auto& c : choices) c = rng.below(params.d);
    const auto target = static_cast<PeerId>(rng.below(params.n));
    auto out = run_dpol(config, choices, FaultModel{}, rng.next());

    std::vector<std::size_t> votes(params.d, 0);
    const auto& recipients = out.recipients[target];
    for (std::size_t i = 0; i < coalition; ++i) {
      for (const auto& [from, share] : out.received[recipients[i]]) {
        if (from != target) continue;
        for (std::size_t j = 0; j < share.size(); ++j) votes[j] += share[j];
      }
    }
    const auto best = *std::max_element(votes.begin(), votes.end());
    std::vector<std::size_t> tied;
    for (std::size_t j = 0; j < votes.size(); ++j) {
      if (votes[j] == best) tied.push_back(j);
    }
    const auto guess = tied[rng.below(tied.size())];
    result.correct += guess == choices[target];
  }
  result.accuracy =
      static_cast<double>(result.correct) / static_cast<double>(trials);
  return result;
}

ProbeResult chain_linkage_probe(const ChainParams& params, std::size_t runs,
                                std::uint64_t seed) {
  params.validate();
  if (runs * params.n < kMinTrials) {
    throw std::invalid_argument(
        "linkage probe needs at least 100 confirmed tokens (runs * n)");
  }
  ProbeResult result;
  result.baseline = 1.0 / static_cast<double>(params.n);
  Rng rng(seed);
  ChainConfig config{params, 1'000'000};
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<std::size_t> choices(params.n);
    for (auto& c : choices) c = rng.below(params.d);
    auto out = run_chain(config, choices, FaultModel{}, rng.next());

    std::map<Digest, PeerId> owner;
    for (const auto& [peer, token] : out.tokens) owner[token.serial] = peer;
    for (const auto& [tx, proposer] : out.confirmed) {
      std::optional<PeerId> guess;
      const mpz_class serial_value = crypto::mpz_from_bytes(tx.token.serial);
      for (const auto& e : out.issuance) {
        if (e.blinded == serial_value ||
            e.blinded_signature == tx.token.signature) {
          guess = e.identity;
          break;
        }
      }
      if (!guess) guess = static_cast<PeerId>(rng.below(params.n));
      ++result.trials;
      auto it = owner.find(tx.token.serial);
      result.correct += it != owner.end() && it->second == *guess;
    }
  }
  if (result.trials < kMinTrials) {
    throw std::invalid_argument("linkage probe confirmed fewer than 100 tokens");
  }
  result.accuracy = static_cast<double>(result.correct) /
                    static_cast<double>(result.trials);
  return result;
}

std::vector<RobustnessRow> robustness_report(
    const std::vector<FaultLevel>& grid,
    const std::function<RunResult(const FaultModel&)>& runner,
    const std::function<Tally(const FaultModel&)>& expected) {
  std::vector<RobustnessRow> rows;
  for (const auto& level : grid) {
    RunResult run = runner(level.faults);
    const Tally want = expected(level.faults);
    RobustnessRow row;
    row.label = level.label;
    row.completion = run.completion;
    row.complete = run.complete();
    row.flagged = run.flagged.size();
    for (auto v : run.honest_voters) {
      auto it = run.tallies.find(v);
      if (it != run.tallies.end() && it->second != want) row.exact = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_robustness_csv(const std::vector<RobustnessRow>& rows) {
  std::ostringstream out;
  out << "fault,completion,exact,complete,flagged\n";
  for (const auto& r : rows) {
    out << r.label << "," << r.completion << "," << (r.exact ? "true" : "false")
        << "," << (r.complete ? "true" : "false") << "," << r.flagged << "\n";
  }
  return out.str();
}

}  // namespace distvote
