#pragma once

// Augmented expected improvement for noisy objectives and its maximization
// over the hierarchical design space.

#include <cstddef>
#include <vector>

#include "asdopt/design_space.hpp"
#include "asdopt/rng.hpp"
#include "asdopt/surrogate.hpp"

namespace asdopt {

struct AcquisitionContext {
  const GpModel& model;
  /// Points evaluated so far.
  std::vector<EncodedPoint> design;
  /// Pessimism constant in mu - c s.
  double c = 1.0;
  /// Observation noise standard deviation.
  double sigma = 0.0;
};

struct EffectiveBest {
  std::size_t index = 0;
  /// Posterior mean at the effective best point.
  double mean = 0.0;
  /// mean - c * sd.
  double score = 0.0;
};

/// argmax over the evaluated design of mu(x) - c s(x). Ties keep the
/// earliest point.
EffectiveBest effective_best(const AcquisitionContext& ctx);

/// Closed-form AEI for a Gaussian posterior (mean, sd), reference mean
/// `best_mean` and noise sd `sigma`: expected improvement over best_mean
/// scaled by 1 - sigma / sqrt(sigma^2 + sd^2). Never negative.
double augmented_ei(double mean, double sd, double best_mean, double sigma);

double aei(const AcquisitionContext& ctx, const EncodedPoint& x,
           double best_mean);
/// Computes the effective best internally.
double aei(const AcquisitionContext& ctx, const EncodedPoint& x);

struct ProposalOptions {
  int uniform_samples = 2000;
  int focus_rounds = 3;
  int focus_samples = 500;
  /// Half-width of the first focus box as a fraction of each range;
  /// halved every round.
  double focus_fraction = 0.25;
};

/// Valid design point maximizing AEI among uniform samples of the space
/// followed by rounds of sampling in shrinking boxes around the incumbent.
DesignPoint propose_next(const AcquisitionContext& ctx, Engine& rng,
                         const ProposalOptions& options = {});

}  // namespace asdopt
