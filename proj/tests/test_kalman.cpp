#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "plugsmc/kalman.hpp"
#include "toy_models.hpp"

namespace plugsmc {
namespace {

using testing::lg_data;

TEST(Kalman, FirstIncrementIsPredictiveNormal) {
  LGParams p;
  const std::vector<double> y{0.0};
  const KalmanResult k = kalman_filter(p, y);
  EXPECT_NEAR(k.incremental_logliks[0], -0.5 * std::log(4 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(k.incremental_logliks[0], -1.26551, 5e-6);
}

TEST(Kalman, HugeObservationNoiseKeepsPriorMean) {
  LGParams p;
  p.mu0 = 1.5;
  p.var_y = 1e8;
  const std::vector<double> y{10.0, -4.0, 7.0};
  const KalmanResult k = kalman_filter(p, y);
  EXPECT_NEAR(k.filter_means[0], 1.5, 1e-3);
  EXPECT_NEAR(k.filter_means[2], 1.5 * p.a * p.a, 1e-3);
}

TEST(Kalman, VanishingObservationNoiseTracksData) {
  LGParams p;
  p.var_y = 1e-8;
  const std::vector<double> y{0.4, -1.2, 2.5};
  const KalmanResult k = kalman_filter(p, y);
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(k.filter_means[t], y[static_cast<std::size_t>(t)], 1e-6);
}

TEST(Kalman, VarianceConvergesToRiccatiFixedPoint) {
  const LGParams p;
  const auto y = lg_data(p, 200, 1);
  const KalmanResult k = kalman_filter(p, y);
  EXPECT_TRUE((k.filter_vars.array() > 0).all());
  for (int t = 1; t < 200; ++t) {
    EXPECT_LE(std::abs(k.filter_vars[t + 1] - k.filter_vars[t]), std::abs(k.filter_vars[t] - k.filter_vars[t - 1]) + 1e-15);
  }
  EXPECT_LT(std::abs(k.filter_vars[200] - k.filter_vars[199]), 1e-12);
  // Fixed point of P = 1 / (1 / (a^2 P + q) + 1 / r).
  const double v = k.filter_vars[200];
  const double pred = p.a * p.a * v + p.var_x;
  EXPECT_NEAR(v, pred * p.var_y / (pred + p.var_y), 1e-12);
}

TEST(Kalman, StreamingEqualsBatch) {
  const LGParams p;
  const auto y = lg_data(p, 100, 2);
  const KalmanResult k = kalman_filter(p, y);
  KalmanStream s(p);
  double total = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double inc = s.next(y[t]);
    EXPECT_NEAR(inc, k.incremental_logliks[static_cast<Eigen::Index>(t)], 1e-12);
    total += inc;
  }
  EXPECT_NEAR(total, k.total_loglik, 1e-12);
}

TEST(Kalman, MatchesDenseGaussianLikelihood) {
  LGParams p;
  p.mu0 = 0.3;
  p.var0 = 2.0;
  p.a = 0.7;
  p.var_x = 0.5;
  p.b = 1.3;
  p.var_y = 0.8;
  const auto y = lg_data(p, 6, 3);
  const int n = static_cast<int>(y.size());
  // y ~ N(m, S) with cov(x_s, x_t) = a^|t-s| var(x_min(s,t)).
  Eigen::VectorXd var_x(n), m(n);
  var_x[0] = p.var0;
  m[0] = p.b * p.mu0;
  for (int t = 1; t < n; ++t) {
    var_x[t] = p.a * p.a * var_x[t - 1] + p.var_x;
    m[t] = m[t - 1] * p.a;
  }
  Eigen::MatrixXd cov(n, n);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      cov(s, t) = p.b * p.b * std::pow(p.a, std::abs(t - s)) * var_x[std::min(s, t)] + (s == t ? p.var_y : 0.0);
    }
  }
  const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(y.data(), n) - m;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double dense = -0.5 * (n * std::log(2 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
  EXPECT_NEAR(kalman_filter(p, y).total_loglik, dense, 1e-10);
}

TEST(GridPosterior, PointMassPriorPutsAllMassOnOneNode) {
  LGParams p;
  const auto model = testing::lg_pinned(p);
  const auto y = lg_data(p, 20, 4);
  const GridPosterior g = lg_posterior_reference(*model, y, 101);
  ASSERT_EQ(g.axes[0].size(), 1);
  EXPECT_DOUBLE_EQ(g.density(0, 0), 1.0);
  EXPECT_NEAR(g.mean[0], p.a, 1e-15);
  EXPECT_NEAR(g.log_evidence, kalman_filter(p, y).total_loglik, 1e-12);
}

TEST(GridPosterior, SymmetricLikelihoodGivesZeroMean) {
  const auto model = testing::lg_free_a({}, -1, 1);
  const std::vector<double> y(6, 0.0);
  const GridPosterior g = lg_posterior_reference(*model, y, 401);
  EXPECT_NEAR(g.mean[0], 0.0, 1e-10);
}

TEST(GridPosterior, EvidenceAgreesWithPriorMonteCarlo) {
  LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 20, 5);
  const GridPosterior g = lg_posterior_reference(*model, y, 2001);
  Rng rng(6);
  const int n = 1000000;
  const double shift = g.log_evidence;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    LGParams q = p;
    q.a = rng.uniform();
    KalmanStream s(q);
    double ll = 0;
    for (double yt : y) ll += s.next(yt);
    acc += std::exp(ll - shift);
  }
  const double ratio = acc / n;
  EXPECT_NEAR(ratio, 1.0, 0.01);
}

TEST(GridPosterior, TwoParameterGridIsNormalized) {
  LGParams p;
  auto prior = std::make_shared<UniformPrior>(UniformPrior::unit_box(2));
  const LinearGaussianModel model(p, {LGField::a, LGField::var_y}, prior);
  const auto y = lg_data(p, 30, 7);
  const GridPosterior g = lg_posterior_reference(model, y, 81);
  ASSERT_EQ(g.axes.size(), 2u);
  const double h0 = g.axes[0][1] - g.axes[0][0], h1 = g.axes[1][1] - g.axes[1][0];
  double mass = 0;
  for (Eigen::Index i = 0; i < g.density.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.density.cols(); ++j) {
      const double wi = (i == 0 || i == g.density.rows() - 1) ? 0.5 : 1.0;
      const double wj = (j == 0 || j == g.density.cols() - 1) ? 0.5 : 1.0;
      mass += wi * wj * g.density(i, j) * h0 * h1;
    }
  }
  EXPECT_NEAR(mass, 1.0, 1e-9);
}

TEST(Trapezoid, IntegratesLinearExactly) {
  Eigen::VectorXd f(11);
  for (int i = 0; i <= 10; ++i) f[i] = 2.0 * i * 0.1 + 1;
  EXPECT_NEAR(trapezoid(f, 0.1), 2.0, 1e-12);
}

}  // namespace
}  // namespace plugsmc
