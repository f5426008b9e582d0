#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "distvote/commands.hpp"
#include "distvote/scenario.hpp"

using namespace distvote;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  auto dir = std::filesystem::temp_directory_path() / "distvote-scenario-test";
  std::filesystem::create_directories(dir);
  auto path = (dir / name).string();
  std::ofstream(path) << text;
  return path;
}

std::string parse_error_path(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioParseError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST(Scenario, MinimalDefaults) {
  auto s = parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":8})");
  EXPECT_EQ(s.protocol, Protocol::mesh);
  EXPECT_EQ(s.n, 8u);
  EXPECT_EQ(s.d, 2u);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_EQ(s.faults.max_delay, 4u);
  EXPECT_EQ(s.resolved_choices().size(), 8u);
  EXPECT_EQ(s.resolved_choices(), s.resolved_choices());
}

TEST(Scenario, FullRoundTrip) {
  auto s = parse_scenario(R"({
    "schema": "distvote.scenario/1", "protocol": "dpol", "n": 16, "d": 2,
    "params": {"k": 1, "audit": true},
    "choices": {"distribution": [0.25, 0.75]},
    "faults": {"crashed": [2], "drop_probability": 0.1,
               "drop_phases": ["aggregation"],
               "byzantine": {"3": "dpol:silent"}, "lost_messages": [5, 9],
               "max_delay": 6},
    "seed": 44, "max_ticks": 5000, "output": "out/"})");
  EXPECT_EQ(s.params.k, 1u);
  EXPECT_EQ(s.params.audit, true);
  EXPECT_EQ(s.faults.byzantine.at(3), "dpol:silent");
  EXPECT_EQ(s.faults.lost_messages, (std::set<MessageId>{5, 9}));
  EXPECT_EQ(s.faults.drop_phases, std::set<Phase>{Phase::aggregation});
  EXPECT_NO_THROW(s.validate());
  auto again = parse_scenario(s.to_json());
  EXPECT_TRUE(again == s);
  EXPECT_EQ(again.to_json(), s.to_json());
}

TEST(Scenario, ExplicitChoices) {
  auto s = parse_scenario(
      R"({"schema":"distvote.scenario/1","protocol":"mesh","n":3,"d":3,"choices":[2,0,1]})");
  EXPECT_EQ(s.resolved_choices(), (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_TRUE(parse_scenario(s.to_json()) == s);
}

TEST(Scenario, DistributionDrawIsSeeded) {
  auto s = parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":400,
    "choices":{"distribution":[0.9,0.1]},"seed":3})");
  auto c = s.resolved_choices();
  auto zeros = std::count(c.begin(), c.end(), 0u);
  EXPECT_GT(zeros, 320);
  EXPECT_LT(zeros, 390);
}

TEST(Scenario, ErrorsCarryFieldPaths) {
  EXPECT_EQ(parse_error_path(R"({"protocol":"mesh","n":8})"), "schema");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/2","protocol":"mesh","n":8})"),
            "schema");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/1","protocol":"x","n":8})"),
            "protocol");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/1","protocol":"mesh"})"), "n");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":-4})"),
            "n");
  EXPECT_EQ(parse_error_path(
                R"({"schema":"distvote.scenario/1","protocol":"mesh","n":8,"extra":1})"),
            "extra");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":8,
              "faults":{"crashed":["a"]}})"),
            "faults.crashed[0]");
  EXPECT_EQ(parse_error_path(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":8,
              "params":{"bogus":1}})"),
            "params.bogus");
  EXPECT_THROW(parse_scenario("not json"), ConfigError);
}

TEST(Scenario, ValidateRejectsUnusedAndBadParams) {
  EXPECT_EQ(parse_error_path(
                R"({"schema":"distvote.scenario/1","protocol":"mesh","n":8,"params":{"k":1}})"),
            "params.k");
  EXPECT_THROW(parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"dpol","n":10})"),
               ConfigError);
  EXPECT_THROW(parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"spp","n":16,
    "faults":{"byzantine":{"2":"dpol:silent"}}})"),
               ConfigError);
  EXPECT_THROW(parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"mesh","n":3,
    "choices":[0,1]})"),
               ConfigError);
  // validate() on a programmatically built scenario.
  Scenario direct;
  direct.protocol = Protocol::dpol;
  direct.n = 10;
  EXPECT_THROW(direct.validate(), ConfigError);
  direct.n = 9;
  EXPECT_NO_THROW(direct.validate());
}

TEST(Scenario, HeliosPeersIncludeHubAndTrustees) {
  auto s = parse_scenario(R"({"schema":"distvote.scenario/1","protocol":"helios","n":4,
    "faults":{"crashed":[7]}})");
  EXPECT_NO_THROW(s.validate());
  s.faults.crashed = {8};
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Scenario, CanonicalScenariosRun) {
  for (auto p : {Protocol::dpol, Protocol::spp, Protocol::chainvote, Protocol::mesh}) {
    auto s = canonical_scenario(p, 16, 2);
    EXPECT_NO_THROW(s.validate());
    auto r = run_scenario(s);
    EXPECT_TRUE(r.run.complete()) << to_string(p);
    EXPECT_TRUE(r.row.has_value());
    auto csv = render_report_csv(s, r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  }
}

TEST(Scenario, ProtocolNames) {
  for (auto p : {Protocol::dpol, Protocol::spp, Protocol::helios, Protocol::chainvote,
                 Protocol::mesh}) {
    EXPECT_EQ(parse_protocol(to_string(p)), p);
  }
  EXPECT_FALSE(parse_protocol("paxos").has_value());
}

TEST(Commands, RunExitCodes) {
  std::ostringstream out, err;
  auto dir = (std::filesystem::temp_directory_path() / "distvote-cmd-test").string();
  auto ok = write_temp("ok.json",
                       R"({"schema":"distvote.scenario/1","protocol":"mesh","n":6,"seed":2})");
  EXPECT_EQ(command_run(ok, std::nullopt, dir, out, err), kExitOk);
  EXPECT_TRUE(std::filesystem::exists(dir + "/trace.jsonl"));
  auto bad = write_temp("bad.json",
                        R"({"schema":"distvote.scenario/1","protocol":"dpol","n":10})");
  EXPECT_EQ(command_run(bad, std::nullopt, dir, out, err), kExitConfig);
  auto lossy = write_temp("lossy.json", R"({"schema":"distvote.scenario/1","protocol":"dpol",
    "n":9,"faults":{"drop_probability":1.0}})");
  EXPECT_EQ(command_run(lossy, std::nullopt, dir, out, err), kExitIncomplete);
  EXPECT_EQ(command_run("/nonexistent/file.json", std::nullopt, dir, out, err), kExitConfig);
}

TEST(Commands, SweepNeedsThreeSizes) {
  std::ostringstream out, err;
  EXPECT_EQ(command_sweep("mesh", {8, 16}, 1, 1, std::nullopt, out, err), kExitConfig);
  EXPECT_EQ(command_sweep("mesh", {8, 16, 32}, 1, 1, std::nullopt, out, err), kExitOk);
  EXPECT_NE(out.str().find("# exponent"), std::string::npos);
}

TEST(Commands, Table1ForcedFaultMismatch) {
  auto ok = table1(5);
  EXPECT_TRUE(ok.matches);
  auto broken = table1(5, std::string("spp:silent-root"));
  EXPECT_FALSE(broken.matches);
  EXPECT_FALSE(broken.rows[1].classifiable);
  EXPECT_THROW(table1(5, std::string("unknown:behavior")), ConfigError);
}
