// asdopt: scenario runner for adaptive seamless design optimization.
//
//   asdopt run <config>                    all configured methods
//   asdopt grid <config>                   Grid / GridSmall only, plus curves
//   asdopt validate <summary> <design-id>  re-validate a chosen design
//   asdopt curves <history>                power curves from a history file

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asdopt/errors.hpp"
#include "asdopt/reporting.hpp"
#include "asdopt/runner.hpp"
#include "asdopt/scenario_config.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw asdopt::ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization and grid search for adaptive seamless designs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> nsim_override;
  int workers = asdopt::default_workers();
  bool quiet = false;

  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--workers", workers, "Worker threads (default: $ASDOPT_WORKERS or cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Override the output directory");
  app.add_option("--nsim-override", nsim_override, "Override Monte Carlo iterations")
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "No progress output");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every configured scenario and method");
  run->add_option("config", config_path, "Scenario config (JSON)")->required();

  auto* grid = app.add_subcommand("grid", "Run only the grid searches and emit power curves");
  grid->add_option("config", config_path, "Scenario config (JSON)")->required();

  std::string summary_path, id;
  int reps = 20;
  auto* val = app.add_subcommand("validate", "Re-validate a chosen design with fresh seeds");
  val->add_option("summary", summary_path, "summary.json of a previous run")->required();
  val->add_option("design-id", id, "Run id, e.g. linear-1000/BO/3")->required();
  val->add_option("--reps", reps, "Validation replicates")->check(CLI::PositiveNumber);

  std::string history_path;
  auto* curves = app.add_subcommand("curves", "Power curves from a history file");
  curves->add_option("history", history_path, "history.csv of a grid run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    asdopt::RunOptions options;
    options.seed = seed;
    options.output_dir = output_dir;
    options.nsim_override = nsim_override;
    options.workers = workers;
    options.log = quiet ? nullptr : &std::cerr;

    if (*run || *grid) {
      options.grid_only = static_cast<bool>(*grid);
      const auto config =
          asdopt::apply_overrides(asdopt::load_config(config_path), options);
      const int status = asdopt::run_and_write(config, options);
      if (!quiet && !config.scenarios.empty()) {
        std::cerr << "wrote " << config.output_dir << "/summary.json\n";
      }
      return status;
    }
    if (*val) {
      std::cout << asdopt::validate_from_summary(slurp(summary_path), id, reps, seed,
                                                 nsim_override);
      return 0;
    }
    if (*curves) {
      std::ifstream in(history_path);
      if (!in) throw asdopt::ConfigError("cannot open " + history_path);
      auto rows = asdopt::read_history(in);
      // Curves describe grid searches; other methods' rows are only used
      // when the file holds no grid rows at all.
      std::vector<asdopt::HistoryRow> grid_rows;
      for (const auto& row : rows) {
        if (row.method == "Grid" || row.method == "GridSmall") grid_rows.push_back(row);
      }
      if (!grid_rows.empty()) rows = std::move(grid_rows);
      std::ostringstream out;
      asdopt::write_curves(out, asdopt::power_curves(rows));
      if (output_dir) {
        asdopt::write_file_atomic(std::filesystem::path(*output_dir) / "curves.csv",
                                  out.str());
      } else {
        std::cout << out.str();
      }
      return 0;
    }
  } catch (const asdopt::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
