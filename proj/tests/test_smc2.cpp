#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "plugsmc/errors.hpp"
#include "plugsmc/kalman.hpp"
#include "plugsmc/smc2.hpp"
#include "plugsmc/weighted_stats.hpp"
#include "toy_models.hpp"

namespace plugsmc {
namespace {

using testing::lg_data;

Smc2Config small(int n_theta, int n_x, std::uint64_t seed) {
  Smc2Config c;
  c.n_theta = n_theta;
  c.n_x = n_x;
  c.seed = seed;
  return c;
}

TEST(Smc2Init, UniformWeightsAndCounters) {
  const auto model = testing::lg_free_a();
  const Smc2State s = smc2_init(*model, small(40, 25, 1));
  EXPECT_EQ(s.n_theta(), 40);
  EXPECT_TRUE((s.weights.w.array() == 1.0 / 40).all());
  EXPECT_EQ(s.calls.transitions, 40u * 25u);
  EXPECT_EQ(s.calls.measurements, 0u);
}

TEST(Smc2Init, SingleThetaIsOneParticleFilter) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 30, 2);
  const Smc2Config c = small(1, 100, 2);
  Smc2State s = smc2_init(*model, c);
  for (double yt : y) smc2_assimilate(s, yt);

  Rng rng = Rng::stream(c.seed, StreamPurpose::theta_init, 0);
  const Theta theta = model->prior().sample(rng);
  FilterState f = pf_init(*model, theta, c.n_x, rng, false);
  for (std::size_t t = 0; t < y.size(); ++t) {
    Rng step = Rng::stream(c.seed, StreamPurpose::filter_step, 0, t);
    pf_step(f, y[t], c.x_scheme, step);
  }
  EXPECT_EQ(s.particles[0].theta, theta);
  EXPECT_DOUBLE_EQ(s.log_evidence, f.cum_loglik);
  for (const auto& step : s.trace) EXPECT_FALSE(step.rejuvenated);
}

TEST(Smc2, FlatMeasurementKeepsUniformWeights) {
  const testing::FlatMeasurementModel model;
  Smc2State s = smc2_init(model, small(30, 20, 3));
  for (int t = 0; t < 25; ++t) {
    smc2_assimilate(s, 0.0);
    EXPECT_DOUBLE_EQ(s.log_evidence, 0.0);
    EXPECT_DOUBLE_EQ(s.trace.back().ess, 1.0);
    EXPECT_FALSE(s.trace.back().rejuvenated);
  }
  // No rejuvenation: exactly N_x (t + 1) calls per theta-particle.
  EXPECT_DOUBLE_EQ(s.trace.back().transitions_per_theta, 20.0 * 25);
  EXPECT_DOUBLE_EQ(s.trace.back().measurements_per_theta, 20.0 * 25);
}

TEST(Smc2, EvidenceCloseToGridOnAverage) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 50, 4);
  const double ref = lg_posterior_reference(*model, y, 4001).log_evidence;
  double mean = 0;
  for (int seed = 0; seed < 4; ++seed) {
    Smc2State s = smc2_init(*model, small(300, 100, 40 + static_cast<std::uint64_t>(seed)));
    for (double yt : y) smc2_assimilate(s, yt);
    mean += s.log_evidence / 4;
  }
  EXPECT_NEAR(mean, ref, 0.3);
}

TEST(Smc2, EssResetsAtEachRejuvenation) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 60, 5);
  Smc2State s = smc2_init(*model, small(100, 50, 5));
  for (double yt : y) smc2_assimilate(s, yt);
  int count = 0;
  for (const auto& step : s.trace) {
    if (!step.rejuvenated) continue;
    ++count;
    EXPECT_LT(step.ess_before, 0.5);
    EXPECT_DOUBLE_EQ(step.ess_after_reset, 1.0);
  }
  EXPECT_GT(count, 0);
}

TEST(Smc2, NoMovesOnlyResamples) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 20, 6);
  Smc2Config c = small(80, 30, 6);
  c.n_moves = 0;
  Smc2State s = smc2_init(*model, c);
  std::vector<double> initial;
  for (const auto& tp : s.particles) initial.push_back(tp.theta[0]);
  for (double yt : y) smc2_assimilate(s, yt);
  bool rejuvenated = false;
  for (const auto& step : s.trace) rejuvenated = rejuvenated || step.rejuvenated;
  ASSERT_TRUE(rejuvenated);
  std::vector<double> now;
  for (const auto& tp : s.particles) {
    EXPECT_NE(std::find(initial.begin(), initial.end(), tp.theta[0]), initial.end());
    now.push_back(tp.theta[0]);
  }
  std::sort(now.begin(), now.end());
  EXPECT_LT(std::unique(now.begin(), now.end()) - now.begin(), 80);
}

TEST(Smc2, RejuvenatedFiltersMatchTheirParameters) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 40, 7);
  Smc2State s = smc2_init(*model, small(60, 40, 7));
  for (double yt : y) smc2_assimilate(s, yt);
  for (const auto& tp : s.particles) {
    EXPECT_EQ(tp.filter.theta, tp.theta);
    EXPECT_EQ(tp.filter.t, s.t);
    double sum = 0;
    for (double m : tp.filter.step_log_means) sum += m;
    EXPECT_NEAR(tp.filter.cum_loglik, sum, 1e-12);
    EXPECT_EQ(tp.filter.step_log_means.size(), y.size());
  }
}

TEST(Smc2, MoveAtACommonPointAcceptsLikeEstimateRatios) {
  // Every theta-particle sits at the same value, so the fitted proposal is a
  // jitter-sized Gaussian at that value and each move compares two
  // independent likelihood estimates.
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 10, 8);
  Smc2Config c = small(400, 30, 8);
  c.n_moves = 1;
  Smc2State s = smc2_init(*model, c);
  for (int k = 0; k < c.n_theta; ++k) {
    auto& tp = s.particles[static_cast<std::size_t>(k)];
    tp.theta = Eigen::VectorXd::Constant(1, 0.6);
    tp.log_prior = 0;
    Rng rng = Rng::stream(8, StreamPurpose::test, static_cast<std::uint64_t>(k));
    tp.filter = run_particle_filter(*model, tp.theta, y, c.n_x, c.x_scheme, rng, false);
  }
  s.observations = y;
  s.t = static_cast<int>(y.size()) - 1;
  s.weights = WeightVector::uniform(c.n_theta);
  const double rate = smc2_rejuvenate(s);

  // The current point is the proposal mean, so the proposal-density ratio
  // contributes exp(z^2 / 2) with z the standardized step.
  double expected = 0;
  const int pairs = 4000;
  Rng rng(9);
  for (int i = 0; i < pairs; ++i) {
    const Theta theta = Eigen::VectorXd::Constant(1, 0.6);
    const double a = run_particle_filter(*model, theta, y, c.n_x, c.x_scheme, rng, false).cum_loglik;
    const double b = run_particle_filter(*model, theta, y, c.n_x, c.x_scheme, rng, false).cum_loglik;
    const double z = rng.normal();
    expected += std::min(1.0, std::exp(b - a + 0.5 * z * z)) / pairs;
  }
  EXPECT_NEAR(rate, expected, 0.05);
}

TEST(Smc2, MovesPreserveApproximatePosterior) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 30, 10);
  const GridPosterior g = lg_posterior_reference(*model, y, 2001);
  Smc2State s = smc2_init(*model, small(500, 100, 10));
  for (double yt : y) smc2_assimilate(s, yt);
  const double before = weighted_mean(s.theta_matrix(), s.weights.w)[0];
  smc2_rejuvenate(s);
  const double after = s.theta_matrix().row(0).mean();
  EXPECT_NEAR(before, g.mean[0], 0.02);
  EXPECT_NEAR(after, g.mean[0], 0.02);
}

TEST(Smc2, PredictiveBandOfDeterministicModelHasZeroWidth) {
  LGParams p;
  p.var0 = 0;
  p.mu0 = 1.0;
  p.var_x = 0;
  p.var_y = 0;
  p.a = 0.8;
  const auto model = testing::lg_pinned(p);
  Smc2State s = smc2_init(*model, small(20, 10, 11));
  double x = 1.0;
  for (int t = 0; t < 5; ++t) {
    smc2_assimilate(s, x);
    x *= 0.8;
  }
  Rng rng(11);
  const PredictiveBand band = smc2_predict_obs(s, rng);
  EXPECT_NEAR(band.quantiles[0], x, 1e-12);
  EXPECT_NEAR(band.quantiles[1], x, 1e-12);
}

TEST(Smc2, PredictiveMeanMatchesKalmanAtKnownParameter) {
  const LGParams p;
  const auto model = testing::lg_pinned(p);
  const auto y = lg_data(p, 15, 12);
  Smc2State s = smc2_init(*model, small(4000, 200, 12));
  for (double yt : y) smc2_assimilate(s, yt);
  KalmanStream k(p);
  for (double yt : y) k.next(yt);
  Rng rng(12);
  const PredictiveBand band = smc2_predict_obs(s, rng);
  const double mean = band.draws.dot(band.weights);
  const double var = (band.draws.array() - mean).square().matrix().dot(band.weights);
  const double se = std::sqrt(var / (ess(band.weights) * band.draws.size()));
  EXPECT_NEAR(mean, p.b * k.predictive_mean(), 4 * se);
  EXPECT_NEAR(var, p.b * p.b * k.predictive_var() + p.var_y, 0.15 * var);
}

TEST(Smc2, PriorPredictiveBeforeAnyData) {
  const auto model = testing::lg_pinned({});
  const Smc2State s = smc2_init(*model, small(3000, 1, 13));
  Rng rng(13);
  const PredictiveBand band = smc2_predict_obs(s, rng);
  // y_0 ~ N(0, 2): 10% and 90% quantiles are -/+ 1.2816 sqrt(2).
  EXPECT_NEAR(band.quantiles[0], -1.2816 * std::sqrt(2.0), 0.12);
  EXPECT_NEAR(band.quantiles[1], 1.2816 * std::sqrt(2.0), 0.12);
}

TEST(Quantiles, MidpointMedian) {
  Eigen::VectorXd v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1;
  EXPECT_DOUBLE_EQ(weighted_quantile(v, Eigen::VectorXd::Constant(100, 0.01), 0.5), 50.5);
}

TEST(Quantiles, AllMassOnOneParticle) {
  const auto model = testing::lg_free_a();
  Smc2State s = smc2_init(*model, small(10, 5, 14));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(10);
  w[3] = 1;
  s.weights.w = w;
  const std::vector<double> levels{0.05, 0.5, 0.95};
  const Eigen::MatrixXd q = smc2_posterior_quantiles(s, levels);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(q(0, j), s.particles[3].theta[0]);
}

TEST(Quantiles, MatchSortAndAccumulate) {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    Eigen::VectorXd v(n), w(n);
    for (int i = 0; i < n; ++i) {
      v[i] = rng.normal();
      w[i] = rng.uniform();
    }
    w /= w.sum();
    const double level = rng.uniform();
    std::vector<std::pair<double, double>> sorted;
    for (int i = 0; i < n; ++i) sorted.emplace_back(v[i], w[i]);
    std::sort(sorted.begin(), sorted.end());
    double acc = 0, expected = sorted.back().first;
    for (const auto& [value, weight] : sorted) {
      acc += weight;
      if (acc > level) {
        expected = value;
        break;
      }
    }
    EXPECT_EQ(weighted_quantile(v, w, level), expected);
  }
}

TEST(BayesFactor, Examples) {
  EXPECT_DOUBLE_EQ(bayes_factor(-12.5, -12.5), 1.0);
  EXPECT_NEAR(bayes_factor(std::log(100.0) - 3, -3), 100.0, 1e-10);
}

TEST(Smc2, EvidenceTelescopes) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 40, 16);
  Smc2State s = smc2_init(*model, small(50, 30, 16));
  double acc = 0;
  for (double yt : y) {
    smc2_assimilate(s, yt);
    acc += s.trace.back().log_evidence_increment;
    EXPECT_NEAR(s.log_evidence, acc, 1e-12);
  }
}

TEST(Smc2, RejuvenationCostIsMovesTimesFilterLength) {
  // Proposals outside the prior support skip the filter, so a rejuvenation
  // before y_t adds (filters run) * n_x * t draws, with at most n_moves
  // filters per theta-particle.
  const LGParams p;
  const auto model = testing::lg_free_a(p, -5, 5);
  const auto y = lg_data(p, 40, 17);
  const Smc2Config c = small(50, 30, 17);
  Smc2State s = smc2_init(*model, c);
  const std::uint64_t per_step = static_cast<std::uint64_t>(c.n_theta) * static_cast<std::uint64_t>(c.n_x);
  std::uint64_t previous = 0;
  std::uint64_t filters_run = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    smc2_assimilate(s, y[t]);
    const Smc2Step& step = s.trace.back();
    const std::uint64_t extra = s.calls.transitions - previous - per_step;
    EXPECT_DOUBLE_EQ(step.transitions_per_theta, static_cast<double>(s.calls.transitions) / c.n_theta);
    if (!step.rejuvenated) {
      EXPECT_EQ(extra, 0u) << "t = " << t;
    } else {
      const std::uint64_t length = static_cast<std::uint64_t>(c.n_x) * t;
      EXPECT_EQ(extra % length, 0u) << "t = " << t;
      EXPECT_LE(extra / length, static_cast<std::uint64_t>(c.n_moves * c.n_theta));
      filters_run += extra / length;
    }
    previous = s.calls.transitions;
  }
  EXPECT_GT(filters_run, 0u);
}

TEST(Smc2, PosteriorInvariantToInnerParticleCount) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 50, 18);
  std::vector<double> means[2];
  for (int i = 0; i < 2; ++i) {
    for (int seed = 0; seed < 6; ++seed) {
      Smc2State s = smc2_init(*model, small(300, i == 0 ? 50 : 1000, 180 + static_cast<std::uint64_t>(seed)));
      for (double yt : y) smc2_assimilate(s, yt);
      means[i].push_back(weighted_mean(s.theta_matrix(), s.weights.w)[0]);
    }
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0, q = 0;
    for (double x : v) m += x / static_cast<double>(v.size());
    for (double x : v) q += (x - m) * (x - m) / static_cast<double>(v.size() - 1);
    return std::pair{m, q};
  };
  const auto [m0, v0] = moments(means[0]);
  const auto [m1, v1] = moments(means[1]);
  const double z = (m0 - m1) / std::sqrt(v0 / 6 + v1 / 6);
  // Welch statistic against the 5% two-sided t critical value at 5 dof.
  EXPECT_LT(std::abs(z), 2.571);
}

TEST(Smc2, SeededRunsRepeatAcrossWorkerCounts) {
  const LGParams p;
  const auto model = testing::lg_free_a(p);
  const auto y = lg_data(p, 30, 19);
  Smc2Config c = small(40, 30, 19);
  Smc2State a = smc2_init(*model, c);
  c.workers = 3;
  Smc2State b = smc2_init(*model, c);
  for (double yt : y) {
    smc2_assimilate(a, yt);
    smc2_assimilate(b, yt);
  }
  EXPECT_EQ(a.log_evidence, b.log_evidence);
  EXPECT_TRUE((a.theta_matrix().array() == b.theta_matrix().array()).all());
}

TEST(Smc2, RejectsInvalidConfiguration) {
  const auto model = testing::lg_free_a();
  Smc2Config c = small(10, 10, 20);
  c.ess_threshold = 1.0;
  EXPECT_THROW(smc2_init(*model, c), ContractViolation);
  c = small(0, 10, 20);
  EXPECT_THROW(smc2_init(*model, c), ContractViolation);
}

}  // namespace
}  // namespace plugsmc
