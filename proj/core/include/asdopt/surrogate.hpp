#pragma once

// Kriging surrogate: Gaussian-process regression with an anisotropic
// Matern 5/2 kernel, constant mean profiled by generalized least squares,
// and an estimated nugget for noisy observations.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "asdopt/rng.hpp"

namespace asdopt {

struct GpBounds {
  double length_min = 1e-2;
  double length_max = 40.0;
  double signal_min = 1e-6;
  double signal_max = 10.0;
  double nugget_min = 1e-8;
  double nugget_max = 1.0;
};

struct GpHyperparameters {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double nugget = 0.0;

  /// [log l_1, ..., log l_d, log signal_variance, log nugget].
  Eigen::VectorXd to_log() const;
  static GpHyperparameters from_log(const Eigen::VectorXd& log_params);
};

struct GpFitOptions {
  int restarts = 5;
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;
  /// Used as one of the starting points when present.
  std::optional<GpHyperparameters> warm_start;
};

struct Posterior {
  double mean = 0.0;
  double sd = 0.0;
};

/// sf2 (1 + sqrt5 rho + 5 rho^2 / 3) exp(-sqrt5 rho), with rho the
/// length-scaled Euclidean distance.
double matern52(std::span<const double> a, std::span<const double> b,
                std::span<const double> length_scales, double signal_variance);

struct LikelihoodValue {
  double value = 0.0;
  /// With respect to GpHyperparameters::to_log() coordinates.
  Eigen::VectorXd gradient;
  double mean_constant = 0.0;
};

/// Log marginal likelihood with the constant mean profiled out, and its
/// analytic gradient. Throws SurrogateError if the kernel matrix cannot be
/// factorized after jitter escalation.
LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& log_params);

class GpModel {
 public:
  /// Maximum-likelihood fit by multi-start quasi-Newton search in log
  /// coordinates inside `bounds`. Rows of X are inputs.
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpBounds& bounds, Engine& rng,
                     const GpFitOptions& options = {});

  /// Model with fixed hyperparameters; only the mean is estimated.
  static GpModel with_hyperparameters(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const GpHyperparameters& hyper);

  /// Posterior of the latent function; the nugget is not part of sd.
  Posterior predict(std::span<const double> x) const;

  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double mean_constant() const { return mean_; }
  double log_likelihood() const { return log_likelihood_; }
  /// Diagonal jitter that had to be added for the factorization.
  double jitter() const { return jitter_; }
  /// True when y had no spread and a constant fallback model was built.
  bool degenerate() const { return degenerate_; }
  Eigen::Index size() const { return X_.rows(); }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }

 private:
  GpModel() = default;
  void factorize();

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  GpHyperparameters hyper_;
  double mean_ = 0.0;
  double log_likelihood_ = 0.0;
  double jitter_ = 0.0;
  bool degenerate_ = false;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

}  // namespace asdopt
