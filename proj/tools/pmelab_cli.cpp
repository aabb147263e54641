// pmelab_cli run <config.json> | verify <report.json> | list-scenarios
// exit status: 0 all rows pass, 1 some row fails, 2 config or runtime error

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pmelab/errors.hpp"
#include "pmelab/experiment.hpp"

using namespace pmelab;

int main(int argc, char** argv) {
  CLI::App app{"porous medium flows on model manifolds"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config_path, "JSON config")->required();
  run->add_option("-o,--output-dir", output_dir, "overrides output_dir of the config");

  std::string report_path;
  auto* verify = app.add_subcommand("verify", "recheck the rows of a report.json");
  verify->add_option("report", report_path, "report.json")->required();

  auto* list = app.add_subcommand("list-scenarios", "print the scenario names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      for (Scenario s : all_scenarios()) std::cout << to_string(s) << "\n";
      return 0;
    }
    if (verify->parsed()) {
      auto rows = read_report(report_path);
      std::cout << report_table(rows);
      for (const auto& r : rows)
        if (!r.pass) return 1;
      return 0;
    }
    auto cfg = load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    auto res = run_experiment(cfg);
    std::cout << res.scenario << " -> " << resolve_output_dir(cfg.output_dir) << "\n"
              << report_table(res.rows);
    return res.status;
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
