#pragma once

// Per-stage, per-arm sample sizes from the stage ratio r and a fixed total
// sample size.

#include <cstdint>
#include <vector>

#include "asdopt/trial_sim.hpp"

namespace asdopt {

struct AllocationResult {
  int n_stage1 = 0;
  int n_stage2 = 0;
  /// Expected number of arms in stage 2, control included.
  double k2_hat = 0.0;
  /// k1 * n_stage1 + k2_hat * n_stage2.
  double achieved_total = 0.0;
  /// Set when calibration never saw a selected arm at the chosen size.
  bool degenerate = false;

  friend bool operator==(const AllocationResult&,
                         const AllocationResult&) = default;
};

/// Half-up rounding used for every per-arm size.
int round_half_up(double x);

/// Stage sizes when the number of stage-2 arms k2 is known:
///   n1 = n_total * r / (k1 r + k2 (1 - r)),
///   n2 = n_total * (1 - r) / (k1 r + k2 (1 - r)).
/// Throws InputError for r outside (0, 1) or non-positive counts, and
/// InfeasibleDesign when a rounded size drops below 1.
AllocationResult stage_sizes_fixed(double r, int k1, int k2, int n_total);

struct CalibrationOptions {
  /// Equally spaced integer candidates for n_stage1 in the coarse scan.
  int candidates = 40;
  /// Stage-1 replications per coarse candidate.
  int replications = 200;
  /// Stage-1 replications per candidate in the integer refinement around
  /// the coarse minimum. 0 disables refinement.
  int refine_replications = 2000;
  /// Relative overshoot of n_total tolerated before n_stage2 is capped by
  /// the budget. A design with no stage-2 patients left under the cap is
  /// infeasible.
  double budget_slack = 0.02;

  friend bool operator==(const CalibrationOptions&,
                         const CalibrationOptions&) = default;
};

struct CalibrationEntry {
  int n_stage1 = 0;
  double k2_hat = 0.0;
  /// Squared deviation of the implied expected total from n_total.
  double h = 0.0;
};

struct Calibration {
  AllocationResult allocation;
  std::vector<CalibrationEntry> coarse;
  /// Final scan the allocation was chosen from; the chosen entry has the
  /// smallest h in it.
  std::vector<CalibrationEntry> scan;
};

/// Calibrates the expected stage-2 arm count for Epsilon / Threshold rules
/// by simulating stage 1 at candidate values of n_stage1 in
/// [ceil(0.01 n_total / k1), ceil(n_total / k1)] and choosing the candidate
/// whose implied expected total sample size is closest to n_total.
/// Throws InfeasibleDesign when the budget leaves no stage-2 patients.
/// k1 counts the control. Candidate streams are derived from `seed`, so the
/// result does not depend on evaluation order.
Calibration calibrate_variable_rule(const SelectionRule& rule,
                                    const EffectSet& effects, double r,
                                    int n_total, double corr,
                                    std::uint64_t seed,
                                    const CalibrationOptions& options = {});

/// Mean realized total sample size k1 n1 + K2 n2 over `draws` simulated
/// stage-1 outcomes, K2 being 1 + |selected|.
double expected_total_sample_size(const SelectionRule& rule,
                                  const EffectSet& effects,
                                  const AllocationResult& allocation,
                                  double corr, int draws, std::uint64_t seed);

}  // namespace asdopt
