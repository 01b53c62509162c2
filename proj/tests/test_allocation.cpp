#include <doctest.h>

#include <cmath>
#include <random>

#include "asdopt/allocation.hpp"
#include "asdopt/errors.hpp"

using namespace asdopt;

TEST_CASE("fixed allocation reproduces the 5 x 100 + 3 x 300 example") {
  const auto a = stage_sizes_fixed(0.25, 5, 3, 1400);
  CHECK(a.n_stage1 == 100);
  CHECK(a.n_stage2 == 300);
  CHECK(a.achieved_total == 1400.0);
  CHECK(a.k2_hat == 3.0);
}

TEST_CASE("equal arm counts collapse the denominator") {
  const auto a = stage_sizes_fixed(0.4, 4, 4, 1000);
  CHECK(a.n_stage1 == 100);
  CHECK(a.n_stage2 == 150);
  const auto b = stage_sizes_fixed(0.5, 2, 2, 600);
  CHECK(b.n_stage1 == 150);
  CHECK(b.n_stage2 == 150);
}

TEST_CASE("fixed allocation respects the total up to rounding") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ur(0.02, 0.98);
  std::uniform_int_distribution<int> uk(1, 6);
  std::uniform_int_distribution<int> un(200, 5000);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = ur(rng);
    const int k1 = uk(rng) + 1;
    const int k2 = std::min(k1, uk(rng));
    const int n = un(rng);
    try {
      const auto a = stage_sizes_fixed(r, k1, k2, n);
      CHECK(std::abs(k1 * a.n_stage1 + k2 * a.n_stage2 - n) <= (k1 + k2) / 2.0);
      ++checked;
    } catch (const InfeasibleDesign&) {
    }
  }
  CHECK(checked > 950);
}

TEST_CASE("fixed allocation errors") {
  CHECK_THROWS_AS(stage_sizes_fixed(0.0, 5, 3, 1000), InputError);
  CHECK_THROWS_AS(stage_sizes_fixed(1.0, 5, 3, 1000), InputError);
  CHECK_THROWS_AS(stage_sizes_fixed(0.5, 0, 3, 1000), InputError);
  CHECK_THROWS_AS(stage_sizes_fixed(0.5, 5, 3, 0), InputError);
  CHECK_THROWS_AS(stage_sizes_fixed(1e-4, 5, 3, 100), InfeasibleDesign);
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.4999) == 2);
}

TEST_CASE("calibration of an always-select-all rule matches the fixed allocation") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  for (double r : {0.15, 0.3, 0.5, 0.72, 0.9}) {
    const auto cal = calibrate_variable_rule(Epsilon{100.0}, eff, r, 1000, 0.4, 5);
    const auto fixed = stage_sizes_fixed(r, 5, 5, 1000);
    CHECK(cal.allocation.k2_hat == 5.0);
    CHECK(cal.allocation.n_stage1 == fixed.n_stage1);
    CHECK(std::abs(cal.allocation.n_stage2 - fixed.n_stage2) <= 1);
    CHECK_FALSE(cal.allocation.degenerate);
  }
}

TEST_CASE("calibration of a never-selecting threshold is flagged") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  const double r = 0.4;
  const auto cal = calibrate_variable_rule(Threshold{1e6}, eff, r, 1000, 0.4, 9);
  CHECK(cal.allocation.k2_hat == 1.0);
  CHECK(cal.allocation.degenerate);
  const double n1 = cal.allocation.n_stage1;
  const double step = 5 + (1 - r) / r;
  CHECK(std::abs(5 * n1 + (1 - r) / r * n1 - 1000) <= step / 2);
}

TEST_CASE("epsilon zero calibrates like a single selected arm") {
  const EffectSet& eff = *find_builtin_effect_set("sigmoid");
  for (double r : {0.2, 0.5, 0.8}) {
    const auto cal = calibrate_variable_rule(Epsilon{0.0}, eff, r, 2000, 0.4, 3);
    const auto fixed = stage_sizes_fixed(r, 5, 2, 2000);
    const double coarse_step = (std::ceil(2000 / 5.0) - std::ceil(0.01 * 2000 / 5.0)) / 39.0;
    CHECK(cal.allocation.k2_hat == 2.0);
    CHECK(std::abs(cal.allocation.n_stage1 - fixed.n_stage1) <= coarse_step);
  }
}

TEST_CASE("chosen candidate minimizes h over the stored scan") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ur(0.1, 0.9);
  for (int i = 0; i < 10; ++i) {
    const double r = ur(rng);
    const SelectionRule rule = i % 2 ? SelectionRule(Epsilon{ur(rng) * 2}) : SelectionRule(Threshold{ur(rng) * 8});
    const auto cal = calibrate_variable_rule(rule, eff, r, 1000, 0.4, 100 + i);
    REQUIRE_FALSE(cal.scan.empty());
    const CalibrationEntry* chosen = nullptr;
    for (const auto& e : cal.scan) {
      if (e.n_stage1 == cal.allocation.n_stage1) chosen = &e;
    }
    REQUIRE(chosen != nullptr);
    for (const auto& e : cal.scan) CHECK(chosen->h <= e.h);
    CHECK(cal.coarse.size() <= 40);
    CHECK(cal.allocation.achieved_total ==
          doctest::Approx(5.0 * cal.allocation.n_stage1 + cal.allocation.k2_hat * cal.allocation.n_stage2));
  }
}

TEST_CASE("calibration is deterministic and keeps the expected total") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  const auto a = calibrate_variable_rule(Epsilon{1.0}, eff, 0.45, 1000, 0.4, 77);
  const auto b = calibrate_variable_rule(Epsilon{1.0}, eff, 0.45, 1000, 0.4, 77);
  CHECK(a.allocation == b.allocation);
  const double total = expected_total_sample_size(Epsilon{1.0}, eff, a.allocation, 0.4, 10000, 12345);
  CHECK(std::abs(total - 1000) <= 20);
}

TEST_CASE("calibration input errors") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  CHECK_THROWS_AS(calibrate_variable_rule(KappaBest{2}, eff, 0.5, 1000, 0.4, 1), InputError);
  CHECK_THROWS_AS(calibrate_variable_rule(Epsilon{1.0}, eff, 1.0, 1000, 0.4, 1), InputError);
  CalibrationOptions bad;
  bad.candidates = 1;
  CHECK_THROWS_AS(calibrate_variable_rule(Epsilon{1.0}, eff, 0.5, 1000, 0.4, 1, bad), InputError);
}

TEST_CASE("the budget bounds stage 2 when r is near zero") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  for (double r : {1e-5, 1e-4, 1e-3, 0.005}) {
    const auto cal = calibrate_variable_rule(Epsilon{3.0}, eff, r, 1000, 0.4, 8);
    CHECK(cal.allocation.n_stage1 == 2);
    CHECK(cal.allocation.achieved_total <= 1020.0);
  }
  // Away from the edge the ratio decides, as before.
  const auto mid = calibrate_variable_rule(Epsilon{3.0}, eff, 0.3, 1000, 0.4, 8);
  CHECK(mid.allocation.n_stage2 == round_half_up(0.7 / 0.3 * mid.allocation.n_stage1));
  CalibrationOptions no_slack;
  no_slack.budget_slack = -1.0;
  CHECK_THROWS_AS(calibrate_variable_rule(Epsilon{1.0}, eff, 0.5, 1000, 0.4, 1, no_slack), InputError);
}

TEST_CASE("a variable rule with no stage-2 patients left is infeasible") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  CHECK_THROWS_AS(calibrate_variable_rule(Epsilon{1.0}, eff, 0.999, 1000, 0.4, 4), InfeasibleDesign);
}
