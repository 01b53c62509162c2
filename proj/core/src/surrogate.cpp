#include "asdopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "asdopt/errors.hpp"

namespace asdopt {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factorization factorize_kernel(const Eigen::MatrixXd& K) {
  Factorization f;
  const Eigen::Index n = K.rows();
  for (double jitter : kJitterLadder) {
    f.llt.compute(K + jitter * Eigen::MatrixXd::Identity(n, n));
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw SurrogateError("kernel matrix not positive definite after jitter 1e-6");
}

// Inputs divided column-wise by the length scales.
Eigen::MatrixXd scaled_inputs(const Eigen::MatrixXd& X,
                              const std::vector<double>& length_scales) {
  Eigen::MatrixXd Xs = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) Xs.col(j) /= length_scales[j];
  return Xs;
}

double matern_of_rho(double rho, double sf2) {
  const double s = kSqrt5 * rho;
  return sf2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// Noise-free kernel matrix (signal part only).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Xs, double sf2) {
  const Eigen::Index n = Xs.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    K(a, a) = sf2;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double rho = (Xs.row(a) - Xs.row(b)).norm();
      K(a, b) = K(b, a) = matern_of_rho(rho, sf2);
    }
  }
  return K;
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double p) {
  p = std::clamp(p, 1e-6, 1.0 - 1e-6);
  return std::log(p / (1.0 - p));
}

// Box in log coordinates, mapped to R^m by a logistic transform so an
// unconstrained quasi-Newton method can be used.
struct LogBox {
  Eigen::VectorXd lo, hi;

  LogBox(const GpBounds& b, Eigen::Index d) : lo(d + 2), hi(d + 2) {
    lo.head(d).setConstant(std::log(b.length_min));
    hi.head(d).setConstant(std::log(b.length_max));
    lo(d) = std::log(b.signal_min);
    hi(d) = std::log(b.signal_max);
    lo(d + 1) = std::log(b.nugget_min);
    hi(d + 1) = std::log(b.nugget_max);
  }

  Eigen::VectorXd to_log(const Eigen::VectorXd& u) const {
    Eigen::VectorXd t(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      t(i) = lo(i) + (hi(i) - lo(i)) * logistic(u(i));
    }
    return t;
  }

  Eigen::VectorXd jacobian(const Eigen::VectorXd& u) const {
    Eigen::VectorXd jac(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double s = logistic(u(i));
      jac(i) = (hi(i) - lo(i)) * s * (1.0 - s);
    }
    return jac;
  }

  Eigen::VectorXd from_log(const Eigen::VectorXd& t) const {
    Eigen::VectorXd u(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      u(i) = logit((t(i) - lo(i)) / (hi(i) - lo(i)));
    }
    return u;
  }
};

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// BFGS with Armijo backtracking. Minimizes f; f may return +inf where it
// is undefined.
Eigen::VectorXd minimize_bfgs(const Objective& f, Eigen::VectorXd x,
                              int max_iterations, double gtol, double& fx) {
  const Eigen::Index m = x.size();
  Eigen::VectorXd g(m), g_new(m);
  fx = f(x, g);
  if (!std::isfinite(fx)) return x;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);

  for (int it = 0; it < max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < gtol) break;
    Eigen::VectorXd p = -H * g;
    double slope = g.dot(p);
    if (slope >= 0.0) {
      H.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      x_new = x + step * p;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }
    const double decrease = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (decrease < 1e-10 * (1.0 + std::abs(fx))) break;
  }
  return x;
}

}  // namespace

Eigen::VectorXd GpHyperparameters::to_log() const {
  const Eigen::Index d = static_cast<Eigen::Index>(length_scales.size());
  Eigen::VectorXd t(d + 2);
  for (Eigen::Index j = 0; j < d; ++j) t(j) = std::log(length_scales[j]);
  t(d) = std::log(signal_variance);
  t(d + 1) = std::log(nugget);
  return t;
}

GpHyperparameters GpHyperparameters::from_log(const Eigen::VectorXd& t) {
  const Eigen::Index d = t.size() - 2;
  GpHyperparameters h;
  h.length_scales.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) h.length_scales[j] = std::exp(t(j));
  h.signal_variance = std::exp(t(d));
  h.nugget = std::exp(t(d + 1));
  return h;
}

double matern52(std::span<const double> a, std::span<const double> b,
                std::span<const double> length_scales, double signal_variance) {
  double sq = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = (a[j] - b[j]) / length_scales[j];
    sq += d * d;
  }
  return matern_of_rho(std::sqrt(sq), signal_variance);
}

LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& log_params) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const GpHyperparameters h = GpHyperparameters::from_log(log_params);
  const Eigen::MatrixXd Xs = scaled_inputs(X, h.length_scales);
  const Eigen::MatrixXd Kf = kernel_matrix(Xs, h.signal_variance);
  const Factorization fac =
      factorize_kernel(Kf + h.nugget * Eigen::MatrixXd::Identity(n, n));

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd kinv_one = fac.llt.solve(ones);
  const double mean = kinv_one.dot(y) / kinv_one.sum();
  const Eigen::VectorXd resid = y - mean * ones;
  const Eigen::VectorXd alpha = fac.llt.solve(resid);

  const Eigen::MatrixXd L = fac.llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();

  LikelihoodValue out;
  out.mean_constant = mean;
  out.value = -0.5 * resid.dot(alpha) - 0.5 * logdet -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // dL/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta). The mean is at
  // its profile optimum, so its dependence on theta drops out.
  const Eigen::MatrixXd kinv = fac.llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd W = alpha * alpha.transpose() - kinv;

  out.gradient = Eigen::VectorXd::Zero(d + 2);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      const double rho = (Xs.row(a) - Xs.row(b)).norm();
      const double s = kSqrt5 * rho;
      // dk/dlog(l_j) = 5/3 sf2 (1 + sqrt5 rho) exp(-sqrt5 rho) (dx_j / l_j)^2
      const double common =
          (5.0 / 3.0) * h.signal_variance * (1.0 + s) * std::exp(-s) * W(a, b);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double dj = Xs(a, j) - Xs(b, j);
        out.gradient(j) += common * dj * dj;  // pair (a,b) and (b,a)
      }
    }
  }
  out.gradient(d) = 0.5 * (W.array() * Kf.array()).sum();
  out.gradient(d + 1) = 0.5 * h.nugget * W.trace();
  return out;
}

GpModel GpModel::with_hyperparameters(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const GpHyperparameters& hyper) {
  if (X.rows() != y.size() || X.rows() < 1) {
    throw InputError("GP inputs and targets must be non-empty and aligned");
  }
  if (static_cast<Eigen::Index>(hyper.length_scales.size()) != X.cols()) {
    throw InputError("one length scale per input dimension required");
  }
  GpModel model;
  model.X_ = X;
  model.y_ = y;
  model.hyper_ = hyper;
  model.factorize();
  return model;
}

void GpModel::factorize() {
  const Eigen::Index n = X_.rows();
  const Eigen::MatrixXd Xs = scaled_inputs(X_, hyper_.length_scales);
  Factorization fac = factorize_kernel(
      kernel_matrix(Xs, hyper_.signal_variance) +
      hyper_.nugget * Eigen::MatrixXd::Identity(n, n));
  jitter_ = fac.jitter;
  chol_ = std::move(fac.llt);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd kinv_one = chol_.solve(ones);
  mean_ = kinv_one.dot(y_) / kinv_one.sum();
  const Eigen::VectorXd resid = y_ - mean_ * ones;
  alpha_ = chol_.solve(resid);

  const Eigen::MatrixXd L = chol_.matrixL();
  log_likelihood_ = -0.5 * resid.dot(alpha_) -
                    L.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpModel GpModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpBounds& bounds, Engine& rng,
                     const GpFitOptions& options) {
  if (X.rows() < 2 || X.rows() != y.size()) {
    throw InputError("GP fit needs at least two aligned observations");
  }
  const Eigen::Index d = X.cols();

  if (y.maxCoeff() - y.minCoeff() < 1e-12) {
    GpHyperparameters flat;
    flat.length_scales.assign(d, 1.0);
    flat.signal_variance = bounds.signal_min;
    flat.nugget = bounds.nugget_min;
    GpModel model = with_hyperparameters(X, y, flat);
    model.degenerate_ = true;
    return model;
  }

  const LogBox box(bounds, d);
  const Objective negative_ll = [&](const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
    try {
      const LikelihoodValue lv = log_marginal_likelihood(X, y, box.to_log(u));
      if (!std::isfinite(lv.value)) return std::numeric_limits<double>::infinity();
      grad = -lv.gradient.cwiseProduct(box.jacobian(u));
      return -lv.value;
    } catch (const SurrogateError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Eigen::VectorXd> starts;
  if (options.warm_start &&
      static_cast<Eigen::Index>(options.warm_start->length_scales.size()) == d) {
    starts.push_back(box.from_log(options.warm_start->to_log()));
  }
  {
    const double var = std::max((y.array() - y.mean()).square().mean(), 1e-6);
    GpHyperparameters guess;
    guess.length_scales.assign(d, 1.0);
    guess.signal_variance = std::clamp(var, bounds.signal_min, bounds.signal_max);
    guess.nugget = std::clamp(0.1 * var, bounds.nugget_min, bounds.nugget_max);
    starts.push_back(box.from_log(guess.to_log()));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) < std::max(1, options.restarts)) {
    Eigen::VectorXd u(d + 2);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = logit(unit(rng));
    starts.push_back(u);
  }

  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  for (const auto& start : starts) {
    double f = 0.0;
    Eigen::VectorXd u = minimize_bfgs(negative_ll, start, options.max_iterations,
                                      options.gradient_tolerance, f);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }
  if (!std::isfinite(best_f)) {
    throw SurrogateError("no starting point gave a finite likelihood");
  }
  return with_hyperparameters(X, y, GpHyperparameters::from_log(box.to_log(best_u)));
}

Posterior GpModel::predict(std::span<const double> x) const {
  const Eigen::Index n = X_.rows();
  const Eigen::Index d = X_.cols();
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = (X_(i, j) - x[j]) / hyper_.length_scales[j];
      sq += diff * diff;
    }
    kstar(i) = matern_of_rho(std::sqrt(sq), hyper_.signal_variance);
  }
  Posterior post;
  post.mean = mean_ + kstar.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(kstar);
  post.sd = std::sqrt(std::max(hyper_.signal_variance - v.squaredNorm(), 0.0));
  return post;
}

}  // namespace asdopt
