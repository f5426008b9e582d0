#include <iostream>

#include "CLI11.hpp"
#include "distvote/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulate and classify distributed voting protocols"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")
      ->required();
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--out", run_out,
                  "Directory for trace.jsonl, outcome.json, report.csv");

  std::uint64_t table_seed = 1;
  std::optional<std::string> table_out;
  std::optional<std::string> forced_fault;
  auto* table = app.add_subcommand("table1", "Reproduce the taxonomy table");
  table->add_option("--seed", table_seed, "Seed for the canonical runs");
  table->add_option("--out", table_out, "Directory for table1.txt/csv");
  table->add_option("--force-fault", forced_fault,
                    "Behavior id applied to every voter of its protocol");

  std::string protocol;
  std::vector<std::size_t> ns;
  std::size_t repeats = 1;
  std::uint64_t sweep_seed = 1;
  std::optional<std::string> sweep_out;
  auto* sw = app.add_subcommand("sweep", "Message counts over n and a fit");
  sw->add_option("--protocol", protocol,
                 "dpol, spp, helios, chainvote or mesh")
      ->required();
  sw->add_option("--n", ns, "Comma-separated voter counts")
      ->required()
      ->delimiter(',');
  sw->add_option("--repeats", repeats, "Runs per n")->required();
  sw->add_option("--seed", sweep_seed, "Base seed");
  sw->add_option("--out", sweep_out, "Directory for sweep.csv and fit.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : distvote::kExitConfig;
  }

  try {
    if (*run) {
      return distvote::command_run(scenario_path, run_seed, run_out, std::cout,
                                   std::cerr);
    }
    if (*table) {
      return distvote::command_table1(table_seed, table_out, forced_fault,
                                      std::cout, std::cerr);
    }
    return distvote::command_sweep(protocol, ns, repeats, sweep_seed,
                                   sweep_out, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return distvote::kExitConfig;
  }
}
