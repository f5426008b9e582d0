#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "distvote/analysis.hpp"
#include "distvote/dpol.hpp"
#include "oracles.hpp"

using namespace distvote;

namespace {

// A complete three-peer run on a mesh overlay with no messages.
RunResult synthetic() {
  RunResult r;
  r.protocol = "synthetic";
  r.overlay = build_gossip_mesh(4, 2, 1);
  r.voters = {0, 1, 2, 3};
  r.honest_voters = r.voters;
  r.status.quiescent = true;
  r.completion = 1.0;
  return r;
}

void act(RunResult& r, PeerId p, Phase ph, RoleSource s, std::string role,
         std::vector<PeerId> relies = {}) {
  r.roles.actions.push_back(RoleAction{0, p, ph, s, std::move(role), "a", std::move(relies)});
}

void send(RunResult& r, PeerId from, PeerId to, Phase ph) {
  SimEvent e;
  e.kind = EventKind::send;
  e.from = from;
  e.to = to;
  e.phase = ph;
  r.trace.events.push_back(e);
}

}  // namespace

TEST(Analysis, EquipotentSyntheticRunIsFullyDistributed) {
  auto r = synthetic();
  for (PeerId p = 0; p < 4; ++p) {
    act(r, p, Phase::casting, RoleSource::everyone, "voter");
    act(r, p, Phase::evaluation, RoleSource::everyone, "voter");
    send(r, p, (p + 1) % 4, Phase::casting);
  }
  auto row = classify(r);
  EXPECT_TRUE(row.classifiable);
  EXPECT_EQ(row.specialisation, Specialisation::none);
  EXPECT_EQ(row.topology, Topology::distributed);
  EXPECT_TRUE(row.all_phases);
  EXPECT_TRUE(row.fully_distributed);
  EXPECT_EQ(row.phases_label(), "all");
}

TEST(Analysis, HubReceivingMostMessagesIsCentralised) {
  auto r = synthetic();
  for (PeerId p = 1; p < 4; ++p) {
    act(r, p, Phase::casting, RoleSource::everyone, "voter");
    send(r, p, 0, Phase::casting);
  }
  act(r, 0, Phase::casting, RoleSource::everyone, "voter");
  act(r, 0, Phase::aggregation, RoleSource::configured, "hub");
  auto row = classify(r);
  EXPECT_EQ(row.topology, Topology::centralised);
  EXPECT_EQ(row.specialisation, Specialisation::selected_authorities);
  EXPECT_EQ(row.distributed_phases, std::set<Phase>{Phase::casting});
  EXPECT_FALSE(row.fully_distributed);
}

TEST(Analysis, RelianceOnPrivilegedPeerBreaksPhase) {
  auto r = synthetic();
  act(r, 0, Phase::evaluation, RoleSource::seeded_draw, "decryptor");
  for (PeerId p = 0; p < 4; ++p) {
    act(r, p, Phase::verification, RoleSource::everyone, "voter", {0});
    act(r, p, Phase::casting, RoleSource::everyone, "voter");
  }
  auto row = classify(r);
  EXPECT_EQ(row.specialisation, Specialisation::random_authorities);
  EXPECT_EQ(row.distributed_phases, std::set<Phase>{Phase::casting});
}

TEST(Analysis, SelfSelectedRoleIsFlexible) {
  auto r = synthetic();
  for (PeerId p = 0; p < 4; ++p) act(r, p, Phase::aggregation, RoleSource::everyone, "voter");
  act(r, 2, Phase::aggregation, RoleSource::self_selected, "miner");
  auto row = classify(r);
  EXPECT_EQ(row.specialisation, Specialisation::none_flexible);
  EXPECT_TRUE(row.all_phases);
}

TEST(Analysis, MissingVoterInPhase) {
  auto r = synthetic();
  for (PeerId p = 0; p < 3; ++p) act(r, p, Phase::casting, RoleSource::everyone, "voter");
  act(r, 3, Phase::evaluation, RoleSource::everyone, "voter");
  auto row = classify(r);
  EXPECT_TRUE(row.classifiable);
  EXPECT_TRUE(row.distributed_phases.empty());
  EXPECT_EQ(row.phases_label(), "-");
}

TEST(Analysis, RegistrationIsIgnored) {
  auto r = synthetic();
  act(r, 0, Phase::registration, RoleSource::configured, "issuer");
  for (PeerId p = 0; p < 4; ++p) act(r, p, Phase::casting, RoleSource::everyone, "voter");
  auto row = classify(r);
  EXPECT_EQ(row.specialisation, Specialisation::none);
  EXPECT_TRUE(row.all_phases);
}

TEST(Analysis, IncompleteOrEmptyRunsAreUnclassifiable) {
  auto r = synthetic();
  EXPECT_FALSE(classify(r).classifiable);
  r.completion = 0.5;
  act(r, 0, Phase::casting, RoleSource::everyone, "voter");
  EXPECT_FALSE(classify(r).classifiable);
}

TEST(Analysis, RingStructureFromRealRun) {
  DpolConfig cfg;
  cfg.params = {16, 1, 2};
  std::vector<std::size_t> choices(16, 1);
  auto out = run_dpol(cfg, choices, {}, 1);
  auto row = classify(out.run);
  EXPECT_TRUE(row.same_category(expected_table1()[0]));
  EXPECT_EQ(row.topology, Topology::structured_ring);
}

TEST(Analysis, ExpectedTable) {
  auto rows = expected_table1();
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].protocol, "dpol");
  EXPECT_EQ(rows[1].specialisation, Specialisation::random_authorities);
  EXPECT_EQ(rows[1].topology, Topology::structured_tree);
  EXPECT_EQ(rows[1].distributed_phases, std::set<Phase>{Phase::aggregation});
  EXPECT_EQ(rows[2].topology, Topology::centralised);
  EXPECT_EQ(rows[2].distributed_phases, std::set<Phase>{Phase::verification});
  EXPECT_EQ(rows[3].specialisation, Specialisation::none_flexible);
  EXPECT_TRUE(rows[3].fully_distributed);
  EXPECT_TRUE(rows[4].same_category(paper_based_row()));
  auto text = render_table_text(rows);
  EXPECT_NE(text.find("structured-ring"), std::string::npos);
  auto csv = render_table_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(Analysis, SameCategoryIgnoresDiagnostics) {
  auto a = paper_based_row();
  auto b = a;
  b.diagnostics.push_back("note");
  EXPECT_TRUE(a.same_category(b));
  b.topology = Topology::centralised;
  EXPECT_FALSE(a.same_category(b));
}

TEST(Analysis, FitComplexityRecoversPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {8.0, 16.0, 32.0, 64.0}) pts.emplace_back(n, 3.0 * std::pow(n, 1.5));
  auto fit = fit_complexity(pts);
  EXPECT_NEAR(fit.exponent, 1.5, 1e-9);
  EXPECT_NEAR(fit.r2, 1.0, 1e-9);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-9);
  EXPECT_NEAR(fit.exponent, oracle::loglog_slope(pts), 1e-12);
  pts.resize(2);
  EXPECT_THROW(fit_complexity(pts), std::invalid_argument);
}

TEST(Analysis, RecipientProbeSmallSample) {
  auto probe = dpol_recipient_probe({9, 1, 2}, 1, 100, 3);
  EXPECT_EQ(probe.trials, 100u);
  EXPECT_NEAR(probe.baseline, 0.5, 1e-12);
  EXPECT_GT(probe.accuracy, 0.45);
  EXPECT_LT(probe.accuracy, 0.9);
  EXPECT_THROW(dpol_recipient_probe({9, 1, 2}, 1, 10, 3), std::invalid_argument);
}

TEST(Analysis, ChainLinkageProbeIsBlind) {
  ChainParams p;
  p.n = 10;
  p.rsa_bits = 512;
  auto probe = chain_linkage_probe(p, 10, 1);
  EXPECT_GE(probe.trials, 100u);
  EXPECT_NEAR(probe.baseline, 0.1, 1e-12);
  EXPECT_LT(probe.accuracy, 0.3);
}

TEST(Analysis, RobustnessReport) {
  std::vector<FaultLevel> grid{{"none", {}}, {"crash-1", {}}};
  grid[1].faults.crashed = {1};
  std::vector<std::size_t> choices{0, 1, 1, 0, 1, 1, 0, 0, 1};
  DpolConfig cfg;
  cfg.params = {9, 1, 2};
  auto rows = robustness_report(
      grid, [&](const FaultModel& f) { return run_dpol(cfg, choices, f, 2).run; },
      [&](const FaultModel&) { return histogram(choices, 2); });
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].complete);
  EXPECT_TRUE(rows[0].exact);
  EXPECT_FALSE(rows[1].complete);
  EXPECT_TRUE(rows[1].exact);
  auto csv = render_robustness_csv(rows);
  EXPECT_NE(csv.find("crash-1"), std::string::npos);
}
