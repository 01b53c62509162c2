#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "asdopt/design_space.hpp"
#include "asdopt/errors.hpp"
#include "asdopt/surrogate.hpp"
#include "support/gp_reference.hpp"

using namespace asdopt;

namespace {

using gp_reference::Mat;
using gp_reference::Vec;
using gp_reference::ref_kernel;
using gp_reference::ref_predict;
using gp_reference::RefPrediction;

Eigen::MatrixXd to_eigen(const Mat& X) {
  Eigen::MatrixXd out(X.size(), X[0].size());
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < X[0].size(); ++j) out(i, j) = X[i][j];
  return out;
}

Mat random_design(Engine& rng, int n) {
  Mat X;
  for (int i = 0; i < n; ++i) {
    const EncodedPoint e = encode(sample_point(rng));
    X.emplace_back(e.begin(), e.end());
  }
  return X;
}

double smooth_target(const Vec& x) {
  return 0.5 + 0.3 * std::sin(3 * x[6]) + 0.1 * x[0] - 0.05 * x[4] + 0.02 * std::min(x[7], 4.0);
}

}  // namespace

TEST_CASE("kernel matches the Matern 5/2 formula") {
  const Vec a{0.1, 0.2}, b{0.5, -0.3}, ls{0.7, 1.3};
  CHECK(matern52(a, b, ls, 1.7) == doctest::Approx(ref_kernel(a, b, ls, 1.7)).epsilon(1e-14));
  CHECK(matern52(a, a, ls, 1.7) == doctest::Approx(1.7));
}

TEST_CASE("predictions match a dense-solve oracle") {
  Engine rng(101);
  std::uniform_int_distribution<int> un(2, 20);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = un(rng);
    const Mat X = random_design(rng, n);
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_target(X[i]) + 0.05 * (u01(rng) - 0.5);
    GpHyperparameters h;
    for (int j = 0; j < 9; ++j) h.length_scales.push_back(std::exp(std::log(0.3) + u01(rng) * std::log(10.0)));
    h.signal_variance = std::exp(std::log(0.01) + u01(rng) * std::log(200.0));
    h.nugget = std::exp(std::log(1e-4) + u01(rng) * std::log(1e3));
    const GpModel model = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), n), h);
    REQUIRE(model.jitter() == 0.0);
    for (int q = 0; q < 5; ++q) {
      const EncodedPoint e = encode(sample_point(rng));
      const Vec x(e.begin(), e.end());
      const RefPrediction ref = ref_predict(X, y, h.length_scales, h.signal_variance, h.nugget, x);
      const Posterior post = model.predict(x);
      CHECK(std::abs(post.mean - ref.mean) < 1e-8);
      CHECK(std::abs(post.sd - ref.sd) < 1e-8);
    }
  }
}

TEST_CASE("likelihood gradient matches central differences") {
  Engine rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 6 + inst % 10;
    const Mat X = random_design(rng, n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = smooth_target(X[i]) + 0.05 * u01(rng);
    Eigen::VectorXd theta(11);
    for (int j = 0; j < 9; ++j) theta(j) = std::log(0.3) + u01(rng) * std::log(20.0);
    theta(9) = std::log(0.05) + u01(rng) * 2;
    theta(10) = std::log(1e-3) + u01(rng) * 3;
    const Eigen::MatrixXd XE = to_eigen(X);
    const LikelihoodValue lv = log_marginal_likelihood(XE, y, theta);
    const double step = 1e-5;
    for (int j = 0; j < 11; ++j) {
      Eigen::VectorXd up = theta, dn = theta;
      up(j) += step;
      dn(j) -= step;
      const double fd = (log_marginal_likelihood(XE, y, up).value -
                         log_marginal_likelihood(XE, y, dn).value) / (2 * step);
      // Central differences carry roughly 1e-9 absolute roundoff here, so
      // components below 1e-2 are compared on an absolute 1e-6 scale.
      const double scale = std::max({std::abs(fd), std::abs(lv.gradient(j)), 1e-2});
      INFO("j=" << j << " g=" << lv.gradient(j) << " fd=" << fd);
      CHECK(std::abs(lv.gradient(j) - fd) / scale < 1e-4);
    }
  }
}

TEST_CASE("fitted hyperparameters beat random hyperparameters") {
  Engine rng(13);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = 24;
  const Mat X = random_design(rng, n);
  Eigen::VectorXd y(n);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (int i = 0; i < n; ++i) y(i) = smooth_target(X[i]) + noise(rng);
  const GpBounds bounds;
  const Eigen::MatrixXd XE = to_eigen(X);
  const GpModel model = GpModel::fit(XE, y, bounds, rng);
  CHECK_FALSE(model.degenerate());
  const double best = model.log_likelihood();
  const auto lerp_log = [&](double lo, double hi) { return std::log(lo) + u01(rng) * (std::log(hi) - std::log(lo)); };
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd theta(11);
    for (int j = 0; j < 9; ++j) theta(j) = lerp_log(bounds.length_min, bounds.length_max);
    theta(9) = lerp_log(bounds.signal_min, bounds.signal_max);
    theta(10) = lerp_log(bounds.nugget_min, bounds.nugget_max);
    CHECK(best >= log_marginal_likelihood(XE, y, theta).value);
  }
  const auto& h = model.hyperparameters();
  for (double l : h.length_scales) {
    CHECK(l >= bounds.length_min * (1 - 1e-9));
    CHECK(l <= bounds.length_max * (1 + 1e-9));
  }
  CHECK(h.nugget >= bounds.nugget_min * (1 - 1e-9));
  CHECK(h.nugget <= bounds.nugget_max * (1 + 1e-9));
  CHECK(log_marginal_likelihood(XE, y, h.to_log()).value == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("constant targets give a flat fallback model") {
  Engine rng(3);
  const Mat X = random_design(rng, 8);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 0.42);
  const GpModel model = GpModel::fit(to_eigen(X), y, GpBounds{}, rng);
  CHECK(model.degenerate());
  for (int q = 0; q < 20; ++q) {
    const EncodedPoint e = encode(sample_point(rng));
    const Posterior p = model.predict(e);
    CHECK(p.mean == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(p.sd <= std::sqrt(GpBounds{}.signal_min) + 1e-12);
  }
}

TEST_CASE("far from the data the prior takes over") {
  Engine rng(4);
  const Mat X = random_design(rng, 10);
  Vec y(10);
  for (int i = 0; i < 10; ++i) y[i] = smooth_target(X[i]);
  GpHyperparameters h;
  h.length_scales.assign(9, 2.0);
  h.signal_variance = 0.3;
  h.nugget = 1e-3;
  const GpModel model = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), 10), h);
  Vec far(9, 200.0);
  const Posterior p = model.predict(far);
  CHECK(std::abs(p.mean - model.mean_constant()) < 1e-6);
  CHECK(std::abs(p.sd - std::sqrt(0.3)) < 1e-6);
}

TEST_CASE("noise-free model interpolates") {
  Engine rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = 12;
  Mat X(n, Vec(9));
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (double& v : X[i]) v = u01(rng);
    y[i] = smooth_target(X[i]);
  }
  GpHyperparameters h;
  h.length_scales.assign(9, 0.8);
  h.signal_variance = 0.5;
  h.nugget = 0.0;
  const GpModel model = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), n), h);
  REQUIRE(model.jitter() == 0.0);
  for (int i = 0; i < n; ++i) {
    const Posterior p = model.predict(X[i]);
    CHECK(std::abs(p.mean - y[i]) < 1e-8);
  }
}

TEST_CASE("predictions are invariant to row order") {
  Engine rng(6);
  const int n = 15;
  const Mat X = random_design(rng, n);
  Vec y(n);
  for (int i = 0; i < n; ++i) y[i] = smooth_target(X[i]);
  GpHyperparameters h;
  h.length_scales = {1.5, 2, 2.5, 3, 1, 1.2, 0.4, 2.2, 5};
  h.signal_variance = 0.2;
  h.nugget = 1e-4;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mat Xp;
  Vec yp;
  for (int i : perm) {
    Xp.push_back(X[i]);
    yp.push_back(y[i]);
  }
  const GpModel a = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), n), h);
  const GpModel b = GpModel::with_hyperparameters(to_eigen(Xp), Eigen::Map<Eigen::VectorXd>(yp.data(), n), h);
  for (int q = 0; q < 50; ++q) {
    const EncodedPoint e = encode(sample_point(rng));
    CHECK(std::abs(a.predict(e).mean - b.predict(e).mean) < 1e-10);
    CHECK(std::abs(a.predict(e).sd - b.predict(e).sd) < 1e-10);
  }
}

TEST_CASE("adding an observation shrinks the posterior sd there") {
  Engine rng(8);
  for (int t = 0; t < 20; ++t) {
    const int n = 10;
    Mat X = random_design(rng, n);
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_target(X[i]);
    GpHyperparameters h;
    h.length_scales.assign(9, 1.0);
    h.signal_variance = 0.1;
    h.nugget = 1e-3;
    const GpModel before = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), n), h);
    const EncodedPoint e = encode(sample_point(rng));
    const Vec x(e.begin(), e.end());
    X.push_back(x);
    y.push_back(smooth_target(x));
    const GpModel after = GpModel::with_hyperparameters(to_eigen(X), Eigen::Map<Eigen::VectorXd>(y.data(), n + 1), h);
    CHECK(after.predict(x).sd < before.predict(x).sd);
  }
}

TEST_CASE("fit input errors") {
  Engine rng(1);
  Eigen::MatrixXd X(1, 9);
  X.setZero();
  Eigen::VectorXd y(1);
  y << 0.5;
  CHECK_THROWS_AS(GpModel::fit(X, y, GpBounds{}, rng), InputError);
}
