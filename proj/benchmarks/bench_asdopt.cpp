#include <benchmark/benchmark.h>

#include "asdopt/acquisition.hpp"
#include "asdopt/allocation.hpp"
#include "asdopt/optimizer.hpp"
#include "asdopt/surrogate.hpp"
#include "asdopt/trial_sim.hpp"

namespace {

using namespace asdopt;

void BM_EstimatePower(benchmark::State& state) {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  SimConstants c;
  c.nsim = static_cast<int>(state.range(0));
  const ResolvedDesign d{100, 150, KappaBest{2}};
  Engine rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power(d, eff, c, rng));
  state.SetItemsProcessed(state.iterations() * c.nsim);
}
BENCHMARK(BM_EstimatePower)->Arg(200)->Arg(1000);

void BM_EstimatePowerDunnett(benchmark::State& state) {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  SimConstants c;
  c.nsim = 200;
  c.test = IntersectionTest::kDunnett;
  const ResolvedDesign d{100, 150, KappaBest{2}};
  Engine rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power(d, eff, c, rng));
}
BENCHMARK(BM_EstimatePowerDunnett);

void BM_Calibrate(benchmark::State& state) {
  const EffectSet& eff = *find_builtin_effect_set("linear");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate_variable_rule(Epsilon{1.0}, eff, 0.5, 1000, 0.4, ++seed));
  }
}
BENCHMARK(BM_Calibrate);

struct Training {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<EncodedPoint> design;
};

Training training(int n) {
  Engine rng(3);
  Training t{Eigen::MatrixXd(n, 9), Eigen::VectorXd(n), {}};
  std::normal_distribution<double> noise(0.0, 0.02);
  for (int i = 0; i < n; ++i) {
    const DesignPoint p = sample_point(rng);
    t.design.push_back(encode(p));
    for (int j = 0; j < 9; ++j) t.X(i, j) = t.design.back()[j];
    t.y(i) = 0.6 - (p.r - 0.4) * (p.r - 0.4) + (p.strategy == Strategy::kAll ? -0.1 : 0.0) + noise(rng);
  }
  return t;
}

void BM_GpFit(benchmark::State& state) {
  const Training t = training(static_cast<int>(state.range(0)));
  Engine rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(GpModel::fit(t.X, t.y, GpBounds{}, rng));
}
BENCHMARK(BM_GpFit)->Arg(16)->Arg(64)->Arg(116)->Unit(benchmark::kMillisecond);

void BM_ProposeNext(benchmark::State& state) {
  const Training t = training(static_cast<int>(state.range(0)));
  Engine rng(5);
  const GpModel model = GpModel::fit(t.X, t.y, GpBounds{}, rng);
  const AcquisitionContext ctx{model, t.design, 1.0, std::sqrt(model.hyperparameters().nugget)};
  for (auto _ : state) benchmark::DoNotOptimize(propose_next(ctx, rng));
}
BENCHMARK(BM_ProposeNext)->Arg(16)->Arg(116)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
