#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "asdopt/errors.hpp"
#include "asdopt/trial_sim.hpp"

using namespace asdopt;

namespace {

const boost::math::normal_distribution<double> kStd;

double ref_upper_p(double z) { return boost::math::cdf(boost::math::complement(kStd, z)); }
double ref_upper_q(double p) { return boost::math::quantile(boost::math::complement(kStd, p)); }

EffectSet null_set(int K) {
  return {"null", std::vector<double>(K + 1, 0.0), std::vector<double>(K + 1, 0.0)};
}

// Explicit list-based closed test with Simes intersections.
std::vector<int> reference_closed_test(const std::vector<double>& z1,
                                       const std::vector<double>& z2,
                                       const std::vector<int>& selected,
                                       double w1, double w2, double level) {
  const int K = static_cast<int>(z1.size());
  auto simes = [](std::vector<double> p) {
    if (p.empty()) return 1.0;
    std::sort(p.begin(), p.end());
    double out = 1.0;
    const double m = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out = std::min(out, m * p[i] / (i + 1.0));
    return out;
  };
  auto clampp = [](double p) { return std::min(std::max(p, 1e-15), 1.0 - 1e-15); };
  std::vector<std::vector<int>> subsets{{}};
  for (int k = 1; k <= K; ++k) {
    const auto n = subsets.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto s = subsets[i];
      s.push_back(k);
      subsets.push_back(s);
    }
  }
  std::vector<int> rejected;
  for (int k : selected) {
    bool ok = true;
    for (const auto& J : subsets) {
      if (std::find(J.begin(), J.end(), k) == J.end()) continue;
      std::vector<double> pa;
      std::vector<double> pb;
      for (int j : J) {
        pa.push_back(ref_upper_p(z1[j - 1]));
        if (std::find(selected.begin(), selected.end(), j) != selected.end())
          pb.push_back(ref_upper_p(z2[j - 1]));
      }
      const double stat = w1 * ref_upper_q(clampp(simes(pa))) + w2 * ref_upper_q(clampp(simes(pb)));
      if (stat < ref_upper_q(level)) ok = false;
    }
    if (ok) rejected.push_back(k);
  }
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

}  // namespace

TEST_CASE("null statistics are standard normal") {
  Engine rng(11);
  const int draws = 20000;
  const EffectSet eff = null_set(4);
  std::vector<double> sum(8, 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto d = draw_stage_statistics(eff, 50, 0.0, rng);
    for (int k = 0; k < 4; ++k) {
      sum[k] += d.z_early[k];
      sum[4 + k] += d.z_final[k];
    }
  }
  for (double s : sum) CHECK(std::abs(s / draws) < 4.0 / std::sqrt(draws));
}

TEST_CASE("stage-1 means follow the effect sizes") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  const std::vector<double> expected{4.81, 5.80, 6.72, 6.43};
  Engine rng(5);
  const int draws = 40000;
  std::vector<double> sum(4, 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto d = draw_stage_statistics(eff, 100, 0.4, rng);
    for (int k = 0; k < 4; ++k) sum[k] += d.z_early[k];
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(eff.early[k + 1] * std::sqrt(50.0) == doctest::Approx(expected[k]).epsilon(0.001));
    CHECK(std::abs(sum[k] / draws - expected[k]) < 0.01);
  }
}

TEST_CASE("stage-1 covariance matches the shared-control model") {
  const double corr = 0.4;
  const int K = 4;
  const int draws = 1000000;
  EffectSet eff = *find_builtin_effect_set("linear");
  Engine rng(99);
  std::vector<double> mean(2 * K, 0.0);
  std::vector<double> cross(4 * K * K, 0.0);
  std::vector<double> v(2 * K);
  for (int i = 0; i < draws; ++i) {
    const auto d = draw_stage_statistics(eff, 30, corr, rng);
    for (int k = 0; k < K; ++k) {
      v[k] = d.z_early[k];
      v[K + k] = d.z_final[k];
    }
    for (int a = 0; a < 2 * K; ++a) {
      mean[a] += v[a];
      for (int b = 0; b < 2 * K; ++b) cross[a * 2 * K + b] += v[a] * v[b];
    }
  }
  for (int a = 0; a < 2 * K; ++a) {
    for (int b = 0; b < 2 * K; ++b) {
      const double cov = cross[a * 2 * K + b] / draws - (mean[a] / draws) * (mean[b] / draws);
      const bool same_outcome = (a < K) == (b < K);
      const bool same_arm = a % K == b % K;
      double expected;
      if (same_outcome) expected = same_arm ? 1.0 : 0.5;
      else expected = same_arm ? corr : corr / 2.0;
      CHECK(std::abs(cov - expected) < 0.01);
    }
  }
}

TEST_CASE("stage statistics reject bad arguments") {
  Engine rng(1);
  const EffectSet eff = null_set(2);
  CHECK_THROWS_AS(draw_stage_statistics(eff, 0, 0.0, rng), InputError);
  CHECK_THROWS_AS(draw_stage_statistics(eff, 10, 1.5, rng), InputError);
  CHECK_THROWS_AS(draw_stage_two_statistics(eff, -1, rng), InputError);
}

TEST_CASE("selection rule examples") {
  const std::vector<double> z{1.0, 2.5, 2.4, 0.3};
  CHECK(apply_selection(Epsilon{0.2}, z).members() == std::vector<int>{2, 3});
  CHECK(apply_selection(Epsilon{0.0}, z).members() == std::vector<int>{2});
  CHECK(apply_selection(KappaBest{1}, z).members() == std::vector<int>{2});
  CHECK(apply_selection(KappaBest{3}, z).members() == std::vector<int>{1, 2, 3});
  CHECK(apply_selection(Threshold{3.0}, z).empty());
  CHECK(apply_selection(Threshold{1.0}, z).members() == std::vector<int>{1, 2, 3});
  const std::vector<double> tied{1.0, 2.0, 2.0, 0.0};
  CHECK(apply_selection(KappaBest{1}, tied).members() == std::vector<int>{2});
}

TEST_CASE("selection rules are nested in their parameter") {
  Engine rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> ud(0.0, 4.0);
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> z(4);
    for (double& x : z) x = nd(rng);
    double a = ud(rng), b = ud(rng);
    if (a > b) std::swap(a, b);
    CHECK(apply_selection(Epsilon{a}, z).is_subset_of(apply_selection(Epsilon{b}, z)));
    CHECK(apply_selection(Threshold{b}, z).is_subset_of(apply_selection(Threshold{a}, z)));
    CHECK(apply_selection(Epsilon{0.0}, z) == apply_selection(KappaBest{1}, z));
  }
}

TEST_CASE("single-hypothesis combination example") {
  const double zq = ref_upper_q(0.025);
  const std::vector<double> z{zq};
  const double w = 1.0 / std::sqrt(2.0);
  const auto res = closed_test(z, z, ArmSet(1u), w, w, 0.025);
  CHECK(std::sqrt(2.0) * zq == doctest::Approx(2.772).epsilon(1e-3));
  CHECK(res.rejected == ArmSet(1u));
  const auto none = closed_test(z, z, ArmSet(), w, w, 0.025);
  CHECK(none.rejected.empty());
}

TEST_CASE("empty stage-2 selection never rejects") {
  Engine rng(8);
  std::normal_distribution<double> nd(3.0, 2.0);
  const double w = std::sqrt(0.5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> z1(4), z2(4);
    for (double& x : z1) x = nd(rng);
    for (double& x : z2) x = nd(rng);
    CHECK(closed_test(z1, z2, ArmSet(), w, w, 0.025).rejected.empty());
  }
}

TEST_CASE("closed test agrees with explicit enumeration") {
  Engine rng(21);
  std::normal_distribution<double> nd(1.8, 1.2);
  std::uniform_real_distribution<double> ud(0.05, 0.95);
  for (int K : {2, 3, 4}) {
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> z1(K), z2(K);
      for (double& x : z1) x = nd(rng);
      for (double& x : z2) x = nd(rng);
      std::vector<int> sel;
      ArmSet s;
      for (int k = 1; k <= K; ++k) {
        if (rng() % 2) {
          sel.push_back(k);
          s.insert(k);
        }
      }
      const double frac = ud(rng);
      const double w1 = std::sqrt(frac);
      const double w2 = std::sqrt(1.0 - frac);
      const auto res = closed_test(z1, z2, s, w1, w2, 0.025);
      CHECK(res.rejected.members() == reference_closed_test(z1, z2, sel, w1, w2, 0.025));
      for (int k : res.rejected.members()) {
        for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
          if (mask & (1u << (k - 1))) CHECK(res.intersection_rejected[mask] == 1);
        }
      }
    }
  }
}

TEST_CASE("closed test validates weights") {
  const std::vector<double> z{1.0, 2.0};
  CHECK_THROWS_AS(closed_test(z, z, ArmSet(1u), 0.6, 0.6, 0.025), InputError);
  CHECK_NOTHROW(closed_test(z, z, ArmSet(1u), 0.6, 0.8, 0.025));
}

TEST_CASE("Dunnett intersection p-values") {
  const std::vector<double> z{1.3, 2.1, 0.4, 1.9};
  CHECK(intersection_p_value(z, 0b0010, IntersectionTest::kDunnett) ==
        doctest::Approx(ref_upper_p(2.1)).epsilon(1e-10));
  CHECK(intersection_p_value(z, 0b0010, IntersectionTest::kSimes) ==
        doctest::Approx(ref_upper_p(2.1)).epsilon(1e-12));
  CHECK(intersection_p_value(z, 0, IntersectionTest::kDunnett) == 1.0);

  // Equicorrelated maximum: Z_k = (U + V_k) / sqrt(2).
  Engine rng(4);
  std::normal_distribution<double> nd;
  const int draws = 1000000;
  for (int m : {2, 4}) {
    const std::uint32_t mask = m == 2 ? 0b1010u : 0b1111u;
    const double c = 2.1;
    long long hits = 0;
    for (int i = 0; i < draws; ++i) {
      const double u = nd(rng);
      double best = -1e300;
      for (int k = 0; k < m; ++k) best = std::max(best, (u + nd(rng)) / std::sqrt(2.0));
      if (best >= c) ++hits;
    }
    const double p = static_cast<double>(hits) / draws;
    const double se = std::sqrt(p * (1 - p) / draws);
    const double got = intersection_p_value(z, mask, IntersectionTest::kDunnett);
    CHECK(std::abs(got - p) < 4 * se);
  }
}

TEST_CASE("power estimation is deterministic") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  SimConstants c;
  c.nsim = 1;
  const ResolvedDesign d{60, 120, KappaBest{2}};
  Engine a(1234), b(1234);
  const auto pa = estimate_power(d, eff, c, a);
  const auto pb = estimate_power(d, eff, c, b);
  CHECK((pa.value == 0.0 || pa.value == 1.0));
  CHECK(pa.value == pb.value);
  CHECK(pa.mc_se == pb.mc_se);

  c.nsim = 500;
  Engine x(77), y(77);
  CHECK(estimate_power(d, eff, c, x).value == estimate_power(d, eff, c, y).value);
}

TEST_CASE("epsilon zero and 1-best share every iteration") {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  SimConstants c;
  Engine a(2024), b(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto oa = simulate_trial({100, 150, Epsilon{0.0}}, eff, c, a);
    const auto ob = simulate_trial({100, 150, KappaBest{1}}, eff, c, b);
    CHECK(oa.selected == ob.selected);
    CHECK(oa.rejected == ob.rejected);
  }
}

TEST_CASE("familywise error under the global null") {
  const EffectSet eff = null_set(4);
  SimConstants c;
  c.ptest = {1, 2, 3, 4};
  c.nsim = 100000;
  Engine rng(31);
  const auto p = estimate_power({80, 120, KappaBest{2}}, eff, c, rng);
  CHECK(p.value <= 0.025 + 3 * std::sqrt(0.025 * 0.975 / 1e5));
}

TEST_CASE("stopped trials count as non-rejections") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  SimConstants c;
  c.nsim = 200;
  Engine rng(6);
  CHECK(estimate_power({50, 50, Threshold{100.0}}, eff, c, rng).value == 0.0);
}

TEST_CASE("simulation constants are validated") {
  const EffectSet& eff = *find_builtin_effect_set("paper");
  Engine rng(1);
  SimConstants c;
  c.ptest = {5};
  CHECK_THROWS_AS(estimate_power({10, 10, KappaBest{1}}, eff, c, rng), InputError);
  c = SimConstants{};
  c.level = 1.0;
  CHECK_THROWS_AS(estimate_power({10, 10, KappaBest{1}}, eff, c, rng), InputError);
  c = SimConstants{};
  c.nsim = 0;
  CHECK_THROWS_AS(estimate_power({10, 10, KappaBest{1}}, eff, c, rng), InputError);
  c = SimConstants{};
  CHECK_THROWS_AS(estimate_power({0, 10, KappaBest{1}}, eff, c, rng), InputError);
  EffectSet bad = eff;
  bad.early[0] = 0.1;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("built-in effect sets") {
  const auto* paper = find_builtin_effect_set("paper");
  const auto* paper2 = find_builtin_effect_set("paper2");
  REQUIRE(paper != nullptr);
  REQUIRE(paper2 != nullptr);
  CHECK(paper->early == std::vector<double>{0, .68, .82, .95, .91});
  CHECK(paper->final == std::vector<double>{0, .13, .17, .23, .20});
  CHECK(paper2->early == paper->early);
  for (std::size_t k = 0; k < paper->final.size(); ++k) CHECK(paper2->final[k] == 2 * paper->final[k]);
  CHECK(find_builtin_effect_set("nope") == nullptr);
  for (const auto& e : builtin_effect_sets()) CHECK_NOTHROW(e.validate());
}
