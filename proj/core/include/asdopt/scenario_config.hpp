#pragma once

// Scenario configuration file: a JSON document naming effect sets, total
// sample sizes, simulator constants and optimizer settings.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "asdopt/allocation.hpp"
#include "asdopt/optimizer.hpp"
#include "asdopt/trial_sim.hpp"

namespace asdopt {

struct ScenarioEntry {
  /// Defaults to "<effect_set>-<n_total>".
  std::string name;
  std::string effect_set;
  int n_total = 1000;

  friend bool operator==(const ScenarioEntry&, const ScenarioEntry&) = default;
};

struct ScenarioConfig {
  std::uint64_t master_seed = 20240101;
  std::string output_dir = "asdopt-out";
  std::vector<Method> methods{Method::kBO, Method::kBOGrid, Method::kGrid,
                              Method::kGridSmall};
  /// Independent BO runs per scenario.
  int replications = 20;
  SimConstants sim;
  int bo_n_init = 16;
  int bo_n_iter = 100;
  double pessimism = 1.0;
  int grid_l = 25;
  int grid_small_l = 7;
  /// Stochastic replicates of every grid point.
  int grid_reps = 20;
  int validation_reps = 20;
  CalibrationOptions calibration;
  /// Inline effect sets; they shadow built-ins of the same name.
  std::vector<EffectSet> effect_sets;
  std::vector<ScenarioEntry> scenarios;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses and validates a configuration document. Throws ConfigError whose
/// message carries the line and column of syntax errors, or the JSON path
/// of the offending entry.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully resolved document: every default spelled out, scenario names
/// filled in. parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

const EffectSet& find_effect_set(const ScenarioConfig& config,
                                 std::string_view name);
std::vector<Scenario> resolve_scenarios(const ScenarioConfig& config);

BoOptions bo_options(const ScenarioConfig& config);

std::string_view to_string(IntersectionTest test);

}  // namespace asdopt
