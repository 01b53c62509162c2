#pragma once

// Monte Carlo simulation of a two-stage adaptive seamless design with
// interim treatment selection, closed testing and inverse normal
// combination of stagewise p-values.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asdopt/rng.hpp"

namespace asdopt {

/// Upper bound on the number of experimental arms; closed testing
/// enumerates 2^K - 1 intersection hypotheses.
inline constexpr int kMaxTreatments = 12;

/// Standardized effect sizes per arm, index 0 is the control.
struct EffectSet {
  std::string name;
  std::vector<double> early;
  std::vector<double> final;

  int treatments() const { return static_cast<int>(early.size()) - 1; }

  /// Throws InputError unless both vectors are finite, of equal length
  /// >= 2, at most kMaxTreatments + 1, and zero at the control.
  void validate() const;

  friend bool operator==(const EffectSet&, const EffectSet&) = default;
};

enum class IntersectionTest { kSimes, kDunnett };

struct SimConstants {
  double corr = 0.4;
  double level = 0.025;
  std::vector<int> ptest{3, 4};
  int nsim = 1000;
  IntersectionTest test = IntersectionTest::kSimes;

  void validate(int treatments) const;

  friend bool operator==(const SimConstants&, const SimConstants&) = default;
};

struct KappaBest {
  int kappa = 1;
  friend bool operator==(const KappaBest&, const KappaBest&) = default;
};
struct Epsilon {
  double eps = 0.0;
  friend bool operator==(const Epsilon&, const Epsilon&) = default;
};
struct Threshold {
  double tau = 0.0;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

using SelectionRule = std::variant<KappaBest, Epsilon, Threshold>;

/// True for rules whose number of selected arms depends on the data.
bool is_variable(const SelectionRule& rule);

/// Subset of treatments {1..K}; bit k-1 represents treatment k.
class ArmSet {
 public:
  constexpr ArmSet() = default;
  constexpr explicit ArmSet(std::uint32_t bits) : bits_(bits) {}

  static constexpr ArmSet all(int treatments) {
    return ArmSet((std::uint32_t{1} << treatments) - 1u);
  }

  constexpr bool contains(int k) const { return (bits_ >> (k - 1)) & 1u; }
  constexpr void insert(int k) { bits_ |= std::uint32_t{1} << (k - 1); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  int size() const;
  std::vector<int> members() const;

  constexpr bool is_subset_of(ArmSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  friend constexpr ArmSet operator&(ArmSet a, ArmSet b) {
    return ArmSet(a.bits_ & b.bits_);
  }
  friend constexpr bool operator==(ArmSet, ArmSet) = default;

 private:
  std::uint32_t bits_ = 0;
};

/// Interim statistics. z_early / z_final are indexed by treatment - 1.
struct StageOneDraw {
  std::vector<double> z_early;
  std::vector<double> z_final;
  ArmSet selected;
};

struct PowerEstimate {
  double value = 0.0;
  int nsim = 0;
  double mc_se = 0.0;

  static PowerEstimate from_count(long long rejections, int nsim);
};

/// Stage sizes and rule after allocation has been resolved.
struct ResolvedDesign {
  int n_stage1 = 1;
  int n_stage2 = 1;
  SelectionRule rule = KappaBest{1};
};

/// Stage-1 early and final outcome z statistics for every treatment
/// against a shared control with n_arm patients per arm. Within an outcome
/// the statistics are correlated 1/2; early and final of the same arm have
/// correlation corr, and corr/2 across arms. `selected` is left empty.
StageOneDraw draw_stage_statistics(const EffectSet& effects, int n_arm,
                                   double corr, Engine& rng);

/// Stage-2 final-outcome z statistics for all K treatments, computed on
/// stage-2 patients only.
std::vector<double> draw_stage_two_statistics(const EffectSet& effects,
                                              int n_arm, Engine& rng);

ArmSet apply_selection(const SelectionRule& rule,
                       std::span<const double> z_early);

struct ClosedTestResult {
  ArmSet rejected;
  /// Indexed by intersection bitmask; entry 0 is unused.
  std::vector<std::uint8_t> intersection_rejected;
};

/// Stagewise p-value of the intersection hypothesis given by `mask`,
/// computed from the members' one-sided p-values (Simes) or from their
/// maximum statistic under equicorrelation 1/2 (Dunnett). Returns 1 for an
/// empty intersection.
double intersection_p_value(std::span<const double> z, std::uint32_t mask,
                            IntersectionTest test);

/// Closed test with the inverse normal combination function. z2 holds
/// stage-2 statistics indexed by treatment - 1; only members of
/// `selected` are read.
ClosedTestResult closed_test(std::span<const double> z1,
                             std::span<const double> z2, ArmSet selected,
                             double w1, double w2, double level,
                             IntersectionTest test = IntersectionTest::kSimes);

struct TrialOutcome {
  ArmSet selected;
  ArmSet rejected;
};

/// One simulated trial. Consumes a fixed number of variates per call
/// regardless of the selection outcome.
TrialOutcome simulate_trial(const ResolvedDesign& design,
                            const EffectSet& effects,
                            const SimConstants& consts, Engine& rng);

/// Fraction of nsim simulated trials rejecting at least one hypothesis in
/// consts.ptest.
PowerEstimate estimate_power(const ResolvedDesign& design,
                             const EffectSet& effects,
                             const SimConstants& consts, Engine& rng);

/// Built-in effect sets: "paper", "linear", "sigmoid", "paper2".
const std::vector<EffectSet>& builtin_effect_sets();
const EffectSet* find_builtin_effect_set(std::string_view name);

}  // namespace asdopt
