#include "asdopt/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asdopt/errors.hpp"

namespace asdopt {

namespace {

void check_ratio(double r) {
  if (!(r > 0.0 && r < 1.0)) {
    throw InputError("stage ratio r must lie in (0, 1), got " +
                     std::to_string(r));
  }
}

// 1 + |S| averaged over `reps` stage-1 draws at n_stage1 per arm.
double estimate_k2(const SelectionRule& rule, const EffectSet& effects,
                   int n_stage1, double corr, int reps, std::uint64_t seed) {
  Engine rng(seed);
  long long selected = 0;
  for (int i = 0; i < reps; ++i) {
    const StageOneDraw draw = draw_stage_statistics(effects, n_stage1, corr, rng);
    selected += apply_selection(rule, draw.z_early).size();
  }
  return 1.0 + static_cast<double>(selected) / reps;
}

CalibrationEntry evaluate_candidate(const SelectionRule& rule,
                                    const EffectSet& effects, double r,
                                    int n_total, double corr, int n_stage1,
                                    int reps, std::uint64_t seed) {
  const int k1 = static_cast<int>(effects.early.size());
  CalibrationEntry entry;
  entry.n_stage1 = n_stage1;
  entry.k2_hat = estimate_k2(rule, effects, n_stage1, corr, reps, seed);
  const double total =
      k1 * static_cast<double>(n_stage1) +
      entry.k2_hat * (1.0 - r) / r * static_cast<double>(n_stage1);
  entry.h = (total - n_total) * (total - n_total);
  return entry;
}

std::size_t argmin_h(const std::vector<CalibrationEntry>& scan) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if (scan[i].h < scan[best].h) best = i;
  }
  return best;
}

}  // namespace

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

AllocationResult stage_sizes_fixed(double r, int k1, int k2, int n_total) {
  check_ratio(r);
  if (k1 < 1 || k2 < 1 || n_total < 1) {
    throw InputError("arm counts and n_total must be positive");
  }
  const double denom = k1 * r + k2 * (1.0 - r);
  AllocationResult out;
  out.n_stage1 = round_half_up(n_total * r / denom);
  out.n_stage2 = round_half_up(n_total * (1.0 - r) / denom);
  if (out.n_stage1 < 1 || out.n_stage2 < 1) {
    throw InfeasibleDesign("r = " + std::to_string(r) + " with n_total = " +
                           std::to_string(n_total) +
                           " leaves a stage with no patients");
  }
  out.k2_hat = k2;
  out.achieved_total =
      static_cast<double>(k1) * out.n_stage1 + static_cast<double>(k2) * out.n_stage2;
  return out;
}

Calibration calibrate_variable_rule(const SelectionRule& rule,
                                    const EffectSet& effects, double r,
                                    int n_total, double corr,
                                    std::uint64_t seed,
                                    const CalibrationOptions& options) {
  check_ratio(r);
  effects.validate();
  if (!is_variable(rule)) {
    throw InputError("calibration applies to Epsilon and Threshold rules only");
  }
  if (n_total < 1 || options.candidates < 2 || options.replications < 1 ||
      options.refine_replications < 0 || !(options.budget_slack >= 0.0)) {
    throw InputError("invalid calibration settings");
  }

  const int k1 = static_cast<int>(effects.early.size());
  const int lo = std::max(1, static_cast<int>(std::ceil(0.01 * n_total / k1)));
  const int hi = std::max(lo, static_cast<int>(std::ceil(static_cast<double>(n_total) / k1)));

  // Common random numbers across candidates within a phase.
  const std::uint64_t coarse_seed = derive_seed(seed, Stream::kCalibration, 1);
  const std::uint64_t refine_seed = derive_seed(seed, Stream::kCalibration, 2);

  Calibration cal;
  int previous = -1;
  for (int i = 0; i < options.candidates; ++i) {
    const int n1 = lo + round_half_up(static_cast<double>(hi - lo) * i /
                                      (options.candidates - 1));
    if (n1 == previous) continue;
    previous = n1;
    cal.coarse.push_back(evaluate_candidate(rule, effects, r, n_total, corr, n1,
                                            options.replications, coarse_seed));
  }

  const std::size_t coarse_best = argmin_h(cal.coarse);
  if (options.refine_replications > 0) {
    const int from = cal.coarse[coarse_best == 0 ? 0 : coarse_best - 1].n_stage1;
    const int to =
        cal.coarse[std::min(coarse_best + 1, cal.coarse.size() - 1)].n_stage1;
    for (int n1 = from; n1 <= to; ++n1) {
      cal.scan.push_back(evaluate_candidate(rule, effects, r, n_total, corr, n1,
                                            options.refine_replications,
                                            refine_seed));
    }
  } else {
    cal.scan = cal.coarse;
  }

  const CalibrationEntry& chosen = cal.scan[argmin_h(cal.scan)];
  AllocationResult& out = cal.allocation;
  out.n_stage1 = chosen.n_stage1;
  // Near r = 0 even the smallest candidate overshoots n_total by a large
  // factor; the budget then bounds stage 2.
  const double budget = (1.0 + options.budget_slack) * n_total;
  const int by_ratio = round_half_up((1.0 - r) / r * chosen.n_stage1);
  const int by_budget = static_cast<int>(
      std::floor((budget - k1 * static_cast<double>(chosen.n_stage1)) / chosen.k2_hat));
  out.n_stage2 = std::min(by_ratio, by_budget);
  if (out.n_stage2 < 1) {
    throw InfeasibleDesign("r = " + std::to_string(r) + " with n_total = " +
                           std::to_string(n_total) +
                           " leaves stage 2 with no patients");
  }
  out.k2_hat = chosen.k2_hat;
  out.achieved_total = static_cast<double>(k1) * out.n_stage1 + out.k2_hat * out.n_stage2;
  out.degenerate = chosen.k2_hat <= 1.0;
  return cal;
}

double expected_total_sample_size(const SelectionRule& rule,
                                  const EffectSet& effects,
                                  const AllocationResult& allocation,
                                  double corr, int draws, std::uint64_t seed) {
  if (draws < 1) throw InputError("draws must be positive");
  const double k1 = static_cast<double>(effects.early.size());
  const double k2 = estimate_k2(rule, effects, allocation.n_stage1, corr, draws, seed);
  return k1 * allocation.n_stage1 + k2 * allocation.n_stage2;
}

}  // namespace asdopt
