#include "asdopt/acquisition.hpp"

#include <algorithm>
#include <cmath>

#include "asdopt/errors.hpp"
#include "asdopt/normal.hpp"

namespace asdopt {

namespace {

constexpr double kMinSd = 1e-12;
constexpr double kEdge = 1e-6;

// Uniform draw in [center - half, center + half] intersected with [lo, hi].
double draw_in_box(double center, double half, double lo, double hi,
                   Engine& rng) {
  const double a = std::max(lo, center - half);
  const double b = std::min(hi, center + half);
  if (b <= a) return std::clamp(center, lo, hi);
  std::uniform_real_distribution<double> unif(a, b);
  return unif(rng);
}

DesignPoint perturb(const DesignPoint& p, double fraction, Engine& rng) {
  DesignPoint q = p;
  q.r = draw_in_box(p.r, fraction, kEdge, 1.0 - kEdge, rng);
  if (q.eps) q.eps = draw_in_box(*p.eps, fraction * kEpsMax, 0.0, kEpsMax, rng);
  if (q.tau) q.tau = draw_in_box(*p.tau, fraction * kTauMax, 0.0, kTauMax, rng);
  return q;
}

}  // namespace

EffectiveBest effective_best(const AcquisitionContext& ctx) {
  if (ctx.design.empty()) throw InputError("effective_best needs a non-empty design");
  EffectiveBest best;
  for (std::size_t i = 0; i < ctx.design.size(); ++i) {
    const Posterior post = ctx.model.predict(ctx.design[i]);
    const double score = post.mean - ctx.c * post.sd;
    if (i == 0 || score > best.score) {
      best.index = i;
      best.mean = post.mean;
      best.score = score;
    }
  }
  return best;
}

double augmented_ei(double mean, double sd, double best_mean, double sigma) {
  const double delta = mean - best_mean;
  if (sd < kMinSd) return std::max(0.0, delta);
  const double u = delta / sd;
  const double correction = 1.0 - sigma / std::sqrt(sigma * sigma + sd * sd);
  const double ei = delta * normal::cdf(u) + sd * normal::pdf(u);
  return std::max(0.0, ei * correction);
}

double aei(const AcquisitionContext& ctx, const EncodedPoint& x,
           double best_mean) {
  const Posterior post = ctx.model.predict(x);
  return augmented_ei(post.mean, post.sd, best_mean, ctx.sigma);
}

double aei(const AcquisitionContext& ctx, const EncodedPoint& x) {
  return aei(ctx, x, effective_best(ctx).mean);
}

DesignPoint propose_next(const AcquisitionContext& ctx, Engine& rng,
                         const ProposalOptions& options) {
  const double best_mean = effective_best(ctx).mean;

  DesignPoint incumbent = sample_point(rng);
  double incumbent_value = aei(ctx, encode(incumbent), best_mean);
  auto consider = [&](const DesignPoint& candidate) {
    const double value = aei(ctx, encode(candidate), best_mean);
    if (value > incumbent_value) {
      incumbent = candidate;
      incumbent_value = value;
    }
  };

  for (int i = 1; i < options.uniform_samples; ++i) consider(sample_point(rng));

  double fraction = options.focus_fraction;
  for (int round = 0; round < options.focus_rounds; ++round) {
    const DesignPoint center = incumbent;
    for (int i = 0; i < options.focus_samples; ++i) {
      consider(perturb(center, fraction, rng));
    }
    fraction *= 0.5;
  }
  return incumbent;
}

}  // namespace asdopt
