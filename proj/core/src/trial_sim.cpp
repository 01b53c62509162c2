#include "asdopt/trial_sim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "asdopt/errors.hpp"
#include "asdopt/normal.hpp"

namespace asdopt {

namespace {

constexpr double kMinP = 1e-15;
constexpr double kMaxP = 1.0 - 1e-15;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// P(max of m standard normals with pairwise correlation 1/2 >= c).
// Conditioning on the shared component U gives
//   1 - E_U[ Phi(sqrt(2) c - U)^m ],
// integrated with the trapezoid rule, which converges geometrically for
// this smooth, rapidly decaying integrand.
double dunnett_tail(double c, int m) {
  if (m == 1) return normal::upper_tail(c);
  constexpr double kHalfWidth = 9.0;
  constexpr int kSteps = 360;
  constexpr double kH = 2.0 * kHalfWidth / kSteps;
  const double a = std::numbers::sqrt2 * c;
  double sum = 0.0;
  for (int i = 0; i <= kSteps; ++i) {
    const double u = -kHalfWidth + i * kH;
    const double t = normal::upper_tail(a - u);
    // 1 - (1 - t)^m without cancellation.
    const double tail = -std::expm1(m * std::log1p(-t));
    const double weight = (i == 0 || i == kSteps) ? 0.5 : 1.0;
    sum += weight * normal::pdf(u) * tail;
  }
  return std::clamp(sum * kH, 0.0, 1.0);
}

double simes(std::span<const double> p, std::uint32_t mask) {
  std::array<double, kMaxTreatments> members{};
  int m = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if ((mask >> k) & 1u) members[m++] = p[k];
  }
  std::sort(members.begin(), members.begin() + m);
  double best = 1.0;
  for (int i = 0; i < m; ++i) {
    best = std::min(best, members[i] * m / (i + 1));
  }
  return best;
}

double dunnett(std::span<const double> z, std::uint32_t mask) {
  double zmax = -std::numeric_limits<double>::infinity();
  int m = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if ((mask >> k) & 1u) {
      zmax = std::max(zmax, z[k]);
      ++m;
    }
  }
  return dunnett_tail(zmax, m);
}

double clamp_p(double p) { return std::clamp(p, kMinP, kMaxP); }

void check_stage_args(const EffectSet& effects, int n_arm) {
  if (n_arm < 1) {
    throw InputError("per-arm sample size must be positive, got " +
                     std::to_string(n_arm));
  }
  if (effects.early.size() < 2 || effects.early.size() != effects.final.size()) {
    throw InputError("effect set '" + effects.name + "' is malformed");
  }
}

}  // namespace

void EffectSet::validate() const {
  if (early.size() < 2 || early.size() != final.size()) {
    throw InputError("effect set '" + name +
                     "': early and final must have equal length >= 2");
  }
  if (treatments() > kMaxTreatments) {
    throw InputError("effect set '" + name + "': at most " +
                     std::to_string(kMaxTreatments) + " treatments supported");
  }
  for (std::size_t i = 0; i < early.size(); ++i) {
    if (!std::isfinite(early[i]) || !std::isfinite(final[i])) {
      throw InputError("effect set '" + name + "': non-finite effect size");
    }
  }
  if (early[0] != 0.0 || final[0] != 0.0) {
    throw InputError("effect set '" + name + "': control effects must be 0");
  }
}

void SimConstants::validate(int treatments) const {
  if (!(std::abs(corr) <= 1.0)) {
    throw InputError("corr must lie in [-1, 1]");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw InputError("level must lie in (0, 1)");
  }
  if (nsim < 1) throw InputError("nsim must be positive");
  if (ptest.empty()) throw InputError("ptest must not be empty");
  for (int k : ptest) {
    if (k < 1 || k > treatments) {
      throw InputError("ptest entry " + std::to_string(k) +
                       " outside 1.." + std::to_string(treatments));
    }
  }
}

bool is_variable(const SelectionRule& rule) {
  return !std::holds_alternative<KappaBest>(rule);
}

int ArmSet::size() const { return std::popcount(bits_); }

std::vector<int> ArmSet::members() const {
  std::vector<int> out;
  for (int k = 1; k <= 32; ++k) {
    if ((bits_ >> (k - 1)) & 1u) out.push_back(k);
  }
  return out;
}

PowerEstimate PowerEstimate::from_count(long long rejections, int nsim) {
  PowerEstimate est;
  est.nsim = nsim;
  est.value = static_cast<double>(rejections) / nsim;
  est.mc_se = std::sqrt(est.value * (1.0 - est.value) / nsim);
  return est;
}

StageOneDraw draw_stage_statistics(const EffectSet& effects, int n_arm,
                                   double corr, Engine& rng) {
  check_stage_args(effects, n_arm);
  if (!(std::abs(corr) <= 1.0)) throw InputError("corr must lie in [-1, 1]");

  const int arms = static_cast<int>(effects.early.size());
  const double scale = std::sqrt(0.5 * n_arm);
  const double resid = std::sqrt(1.0 - corr * corr);
  std::normal_distribution<double> gauss;

  // Standardized arm-mean errors; early/final of one arm share corr.
  std::array<double, kMaxTreatments + 1> e{};
  std::array<double, kMaxTreatments + 1> f{};
  for (int a = 0; a < arms; ++a) {
    const double u = gauss(rng);
    const double v = gauss(rng);
    e[a] = u;
    f[a] = corr * u + resid * v;
  }

  StageOneDraw draw;
  draw.z_early.resize(arms - 1);
  draw.z_final.resize(arms - 1);
  for (int k = 1; k < arms; ++k) {
    draw.z_early[k - 1] =
        effects.early[k] * scale + (e[k] - e[0]) * normal::kInvSqrt2;
    draw.z_final[k - 1] =
        effects.final[k] * scale + (f[k] - f[0]) * normal::kInvSqrt2;
  }
  return draw;
}

std::vector<double> draw_stage_two_statistics(const EffectSet& effects,
                                              int n_arm, Engine& rng) {
  check_stage_args(effects, n_arm);
  const int arms = static_cast<int>(effects.final.size());
  const double scale = std::sqrt(0.5 * n_arm);
  std::normal_distribution<double> gauss;

  std::array<double, kMaxTreatments + 1> g{};
  for (int a = 0; a < arms; ++a) g[a] = gauss(rng);

  std::vector<double> z(arms - 1);
  for (int k = 1; k < arms; ++k) {
    z[k - 1] = effects.final[k] * scale + (g[k] - g[0]) * normal::kInvSqrt2;
  }
  return z;
}

ArmSet apply_selection(const SelectionRule& rule,
                       std::span<const double> z_early) {
  const int K = static_cast<int>(z_early.size());
  ArmSet out;
  std::visit(
      Overloaded{
          [&](const KappaBest& r) {
            if (r.kappa < 1 || r.kappa > K) {
              throw InputError("kappa " + std::to_string(r.kappa) +
                               " outside 1.." + std::to_string(K));
            }
            std::array<int, kMaxTreatments> order{};
            std::iota(order.begin(), order.begin() + K, 0);
            // Larger statistic first; equal statistics keep the lower index.
            std::stable_sort(order.begin(), order.begin() + K,
                             [&](int a, int b) { return z_early[a] > z_early[b]; });
            for (int i = 0; i < r.kappa; ++i) out.insert(order[i] + 1);
          },
          [&](const Epsilon& r) {
            const double zmax = *std::max_element(z_early.begin(), z_early.end());
            for (int k = 0; k < K; ++k) {
              if (z_early[k] >= zmax - r.eps) out.insert(k + 1);
            }
          },
          [&](const Threshold& r) {
            for (int k = 0; k < K; ++k) {
              if (z_early[k] >= r.tau) out.insert(k + 1);
            }
          },
      },
      rule);
  return out;
}

double intersection_p_value(std::span<const double> z, std::uint32_t mask,
                            IntersectionTest test) {
  if (mask == 0) return 1.0;
  if (test == IntersectionTest::kDunnett) return dunnett(z, mask);
  std::array<double, kMaxTreatments> p{};
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = normal::upper_tail(z[k]);
  return simes(std::span<const double>(p.data(), z.size()), mask);
}

ClosedTestResult closed_test(std::span<const double> z1,
                             std::span<const double> z2, ArmSet selected,
                             double w1, double w2, double level,
                             IntersectionTest test) {
  const int K = static_cast<int>(z1.size());
  if (K < 1 || K > kMaxTreatments || z2.size() != z1.size()) {
    throw InputError("closed_test: stage statistics must have equal length in 1.." +
                     std::to_string(kMaxTreatments));
  }
  if (std::abs(w1 * w1 + w2 * w2 - 1.0) > 1e-12 || w1 < 0.0 || w2 < 0.0) {
    throw InputError("closed_test: weights must be non-negative with w1^2 + w2^2 = 1");
  }
  if (!selected.is_subset_of(ArmSet::all(K))) {
    throw InputError("closed_test: selected arms outside 1..K");
  }

  const std::uint32_t full = (std::uint32_t{1} << K) - 1u;
  const double critical = normal::upper_quantile(level);

  std::array<double, kMaxTreatments> p1{};
  std::array<double, kMaxTreatments> p2{};
  if (test == IntersectionTest::kSimes) {
    for (int k = 0; k < K; ++k) {
      p1[k] = normal::upper_tail(z1[k]);
      p2[k] = normal::upper_tail(z2[k]);
    }
  }
  const std::span<const double> p1s(p1.data(), K);
  const std::span<const double> p2s(p2.data(), K);

  auto stage_p = [&](std::span<const double> z, std::span<const double> p,
                     std::uint32_t mask) {
    if (mask == 0) return 1.0;
    return test == IntersectionTest::kSimes ? simes(p, mask) : dunnett(z, mask);
  };

  ClosedTestResult result;
  result.intersection_rejected.assign(std::size_t{full} + 1, 0);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const double pa = clamp_p(stage_p(z1, p1s, mask));
    const double pb = clamp_p(stage_p(z2, p2s, mask & selected.bits()));
    const double combined =
        w1 * normal::upper_quantile(pa) + w2 * normal::upper_quantile(pb);
    result.intersection_rejected[mask] = combined >= critical ? 1 : 0;
  }

  for (int k = 1; k <= K; ++k) {
    if (!selected.contains(k)) continue;
    const std::uint32_t bit = std::uint32_t{1} << (k - 1);
    bool all_rejected = true;
    for (std::uint32_t mask = 1; mask <= full && all_rejected; ++mask) {
      if ((mask & bit) && !result.intersection_rejected[mask]) {
        all_rejected = false;
      }
    }
    if (all_rejected) result.rejected.insert(k);
  }
  return result;
}

TrialOutcome simulate_trial(const ResolvedDesign& design,
                            const EffectSet& effects,
                            const SimConstants& consts, Engine& rng) {
  StageOneDraw stage1 =
      draw_stage_statistics(effects, design.n_stage1, consts.corr, rng);
  const std::vector<double> z2 =
      draw_stage_two_statistics(effects, design.n_stage2, rng);

  TrialOutcome outcome;
  outcome.selected = apply_selection(design.rule, stage1.z_early);
  if (outcome.selected.empty()) return outcome;  // stopped at interim

  const double total = static_cast<double>(design.n_stage1) + design.n_stage2;
  const double w1 = std::sqrt(design.n_stage1 / total);
  const double w2 = std::sqrt(design.n_stage2 / total);
  outcome.rejected = closed_test(stage1.z_final, z2, outcome.selected, w1, w2,
                                 consts.level, consts.test)
                         .rejected;
  return outcome;
}

PowerEstimate estimate_power(const ResolvedDesign& design,
                             const EffectSet& effects,
                             const SimConstants& consts, Engine& rng) {
  effects.validate();
  consts.validate(effects.treatments());
  if (design.n_stage1 < 1 || design.n_stage2 < 1) {
    throw InputError("stage sizes must be positive");
  }
  ArmSet targets;
  for (int k : consts.ptest) targets.insert(k);

  long long hits = 0;
  for (int i = 0; i < consts.nsim; ++i) {
    const TrialOutcome outcome = simulate_trial(design, effects, consts, rng);
    if (!(outcome.rejected & targets).empty()) ++hits;
  }
  return PowerEstimate::from_count(hits, consts.nsim);
}

const std::vector<EffectSet>& builtin_effect_sets() {
  static const std::vector<EffectSet> sets = {
      {"paper", {0.0, 0.68, 0.82, 0.95, 0.91}, {0.0, 0.13, 0.17, 0.23, 0.20}},
      {"linear", {0.0, 0.20, 0.40, 0.60, 0.80}, {0.0, 0.05, 0.10, 0.15, 0.20}},
      {"sigmoid", {0.0, 0.10, 0.20, 0.70, 0.80}, {0.0, 0.025, 0.05, 0.175, 0.20}},
      {"paper2", {0.0, 0.68, 0.82, 0.95, 0.91}, {0.0, 0.26, 0.34, 0.46, 0.40}},
  };
  return sets;
}

const EffectSet* find_builtin_effect_set(std::string_view name) {
  for (const auto& set : builtin_effect_sets()) {
    if (set.name == name) return &set;
  }
  return nullptr;
}

}  // namespace asdopt
