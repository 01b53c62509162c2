#pragma once

// Search strategies over the design space: Bayesian optimization with a
// Kriging surrogate, exhaustive grid search with cross-replicate
// selection, and grid snapping of a Bayesian-optimization result.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "asdopt/acquisition.hpp"
#include "asdopt/allocation.hpp"
#include "asdopt/design_space.hpp"
#include "asdopt/surrogate.hpp"
#include "asdopt/trial_sim.hpp"

namespace asdopt {

enum class Method { kBO, kBOGrid, kGrid, kGridSmall };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct Scenario {
  std::string name;
  EffectSet effects;
  int n_total = 1000;
  SimConstants sim;
  CalibrationOptions calibration;
};

struct EvaluationRecord {
  DesignPoint point;
  AllocationResult allocation;
  PowerEstimate y;
  std::uint64_t seed = 0;
  Stream stream = Stream::kSearch;
  int iteration = 0;
  int replicate = 0;
  double wall_ms = 0.0;
};

/// The black-box objective of one run: resolves per-stage sizes for a
/// design (calibrating variable rules once per distinct design) and
/// estimates its power. Not thread-safe; each run owns one.
class Objective {
 public:
  Objective(Scenario scenario, std::uint64_t master_seed);

  /// Stage sizes for a design. Calibration results are cached on the exact
  /// parameter bits; the calibration seed depends only on the master seed
  /// and those bits, so caching never changes a value.
  AllocationResult resolve(const DesignPoint& p);

  /// Designs whose allocation is infeasible have power 0.
  EvaluationRecord evaluate(const DesignPoint& p, std::uint64_t seed,
                            Stream stream, int iteration, int replicate = 0);

  /// Number of evaluate() calls made with the given stream label.
  std::size_t evaluations(Stream stream) const;
  const Scenario& scenario() const { return scenario_; }

 private:
  using Key = std::tuple<int, std::uint64_t, std::uint64_t>;

  Scenario scenario_;
  std::uint64_t master_seed_;
  std::map<Key, AllocationResult> cache_;
  std::map<Stream, std::size_t> counts_;
};

struct BoOptions {
  int n_init = 16;
  int n_iter = 100;
  double pessimism = 1.0;
  GpBounds bounds;
  GpFitOptions fit;
  ProposalOptions proposal;
  int validation_reps = 20;
};

struct ReplicateChoice {
  std::size_t point_index = 0;
  DesignPoint point;
  /// Outcome in the replicate it was selected in.
  double naive = 0.0;
  /// Mean over the other replicates.
  PowerEstimate held_out;
};

struct RunResult {
  Method method = Method::kBO;
  std::uint64_t master_seed = 0;
  std::vector<EvaluationRecord> history;
  DesignPoint chosen;
  AllocationResult allocation;
  std::vector<PowerEstimate> y_valid;
  /// Grid runs: one selection per replicate.
  std::vector<ReplicateChoice> replicate_choices;
  /// BO runs: surrogate fitted on the full history.
  std::optional<GpModel> final_model;
  /// BO runs: running maximum of observed outcomes.
  std::vector<double> best_so_far;
  int fallback_proposals = 0;
  std::size_t search_evaluations = 0;
  double wall_seconds = 0.0;

  double validated_mean() const;
};

/// Initial random design, then one surrogate fit and one AEI proposal per
/// iteration. The returned design maximizes the final surrogate mean over
/// the evaluated points and is re-evaluated validation_reps times.
RunResult run_bo(const Scenario& scenario, const BoOptions& options,
                 std::uint64_t master_seed);

/// For every replicate j: the point with the best outcome in j, scored by
/// its mean outcome over the other replicates. outcomes[i][j] is point i
/// in replicate j; at least two replicates are required.
std::vector<ReplicateChoice> cross_replicate_select(
    const std::vector<std::vector<double>>& outcomes);

/// Evaluates every point of make_grid(l) `reps` times. y_valid holds the
/// held-out value of each replicate's selection.
RunResult run_grid(const Scenario& scenario, int l, int reps,
                   std::uint64_t master_seed, Method label = Method::kGrid);

/// Nearest grid point with the same strategy, by Euclidean distance over
/// r and the active rule parameter. Ties go to the smaller r.
DesignPoint snap_to_grid(const DesignPoint& p, std::span<const DesignPoint> grid);

/// BO result with its chosen design snapped to make_grid(l) and validated
/// again.
RunResult snap_run(const RunResult& bo, const Scenario& scenario, int l,
                   int validation_reps, std::uint64_t master_seed);

/// Fresh-seed evaluations of a design; seeds come from the validation
/// stream only.
std::vector<PowerEstimate> validate(const DesignPoint& chosen,
                                    const Scenario& scenario, int reps,
                                    std::uint64_t master_seed);
std::vector<PowerEstimate> validate(const DesignPoint& chosen,
                                    Objective& objective, int reps,
                                    std::uint64_t master_seed);

}  // namespace asdopt
