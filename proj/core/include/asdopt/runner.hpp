#pragma once

// Executes every scenario x method x replication of a configuration and
// writes the history, summary and curve files.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asdopt/optimizer.hpp"
#include "asdopt/scenario_config.hpp"

namespace asdopt {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> nsim_override;
  int workers = 1;
  /// Restrict to Grid and GridSmall.
  bool grid_only = false;
  /// Progress lines; null for silence.
  std::ostream* log = nullptr;
};

struct ScenarioOutcome {
  Scenario scenario;
  std::map<Method, std::vector<RunResult>> runs;
  std::vector<std::string> errors;
};

/// Worker count from ASDOPT_WORKERS, else the hardware concurrency.
int default_workers();

/// Applies the seed, output-dir and nsim overrides.
ScenarioConfig apply_overrides(ScenarioConfig config, const RunOptions& options);

/// Seed of one run: depends on the master seed, the scenario position, the
/// method and the replication only.
std::uint64_t run_seed(std::uint64_t master, std::size_t scenario_index,
                       Method method, int replication);

/// Runs all jobs on `options.workers` threads. Results are identical for
/// any worker count. A failing job records an error on its scenario and
/// leaves the others untouched.
std::vector<ScenarioOutcome> run_scenarios(const ScenarioConfig& config,
                                           const RunOptions& options);

std::string design_id(const std::string& scenario, Method method, int replication);

/// history.csv content for all outcomes, in scenario/method/replication
/// order.
std::string render_history(const std::vector<ScenarioOutcome>& outcomes);
/// summary.json content.
std::string render_summary(const ScenarioConfig& config,
                           const std::vector<ScenarioOutcome>& outcomes);

/// Runs and writes history.csv, summary.json and curves.csv (when grids
/// ran) under the output directory. Returns 0 when every scenario
/// succeeded, 2 otherwise. Writes nothing for an empty scenario list.
int run_and_write(const ScenarioConfig& config, const RunOptions& options);

/// Re-evaluates the chosen design `id` of a summary document with fresh
/// validation seeds and returns a JSON report.
std::string validate_from_summary(const std::string& summary_text,
                                  const std::string& id, int reps,
                                  std::optional<std::uint64_t> seed,
                                  std::optional<int> nsim_override);

}  // namespace asdopt
