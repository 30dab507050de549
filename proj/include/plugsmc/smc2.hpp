#ifndef PLUGSMC_SMC2_HPP
#define PLUGSMC_SMC2_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/model.hpp"
#include "plugsmc/particle_filter.hpp"
#include "plugsmc/resampling.hpp"

namespace plugsmc {

struct Smc2Config {
  int n_theta = 1024;
  int n_x = 1024;
  double ess_threshold = 0.5;
  int n_moves = 5;
  ResamplingScheme theta_scheme = ResamplingScheme::systematic;
  ResamplingScheme x_scheme = ResamplingScheme::systematic;
  /// Store full genealogies in every attached filter. Off by default: at
  /// 1024 x 1024 particles over a year of data they need gigabytes.
  bool keep_history = false;
  std::uint64_t seed = 1;
  int workers = 1;

  static Smc2Config paper() { return {}; }
  static Smc2Config desk() {
    Smc2Config c;
    c.n_theta = 128;
    c.n_x = 256;
    return c;
  }
};

/// A parameter particle with its own particle filter over the states.
struct ThetaParticle {
  Theta theta;
  double log_prior = 0;
  FilterState filter;      ///< filter.cum_loglik is log Z-hat for y_{0:t}
  bool collapsed = false;  ///< filter collapsed or diverged; carries zero weight
};

struct Smc2Step {
  int t = 0;
  double ess = 1;
  bool rejuvenated = false;
  double ess_before = 1;
  double ess_after_reset = 1;
  double acceptance_rate = 0;
  int collapsed = 0;  ///< theta-particles newly collapsed at this step
  double log_evidence_increment = 0;
  double log_evidence = 0;
  double transitions_per_theta = 0;   ///< cumulative f-draws / N_theta
  double measurements_per_theta = 0;  ///< cumulative g-evaluations / N_theta
};

struct Smc2State {
  const Model* model = nullptr;
  Smc2Config config;
  int t = -1;  ///< last assimilated time index
  std::vector<ThetaParticle> particles;
  WeightVector weights;
  double log_evidence = 0;
  std::vector<double> observations;  ///< y_{0:t}
  std::vector<Smc2Step> trace;
  CallCounters calls;  ///< all f/g calls, rejuvenation filters included

  int n_theta() const { return static_cast<int>(particles.size()); }
  /// dim_theta x N_theta matrix of the current parameter values.
  Eigen::MatrixXd theta_matrix() const;
};

/// N_theta prior draws, each with a fresh N_x-particle filter; uniform weights.
Smc2State smc2_init(const Model& model, const Smc2Config& config);

/// Assimilates y_{t+1}: rejuvenates first if the ESS of the current weights
/// is below the threshold, then advances every filter and reweights.
void smc2_assimilate(Smc2State& state, double y);

/// Resample + PMMH moves against y_{0:t}; returns the mean acceptance rate.
/// Called by smc2_assimilate; public for tests and custom schedules.
double smc2_rejuvenate(Smc2State& state);

struct PredictiveBand {
  Eigen::VectorXd draws;      ///< one predictive observation per theta-particle
  Eigen::VectorXd weights;    ///< theta-weights of the draws (normalized)
  std::vector<double> levels;
  Eigen::VectorXd quantiles;  ///< one per level
};

/// One-step predictive distribution of the next observation under parameter
/// uncertainty; default levels give the central 80% band. Before the first
/// observation this is the prior predictive of y_0.
PredictiveBand smc2_predict_obs(const Smc2State& state, Rng& rng, std::vector<double> levels = {0.1, 0.9});

/// Weighted quantiles of each parameter: dim_theta x levels.
Eigen::MatrixXd smc2_posterior_quantiles(const Smc2State& state, std::span<const double> levels);

/// Posterior odds of two models under equal prior model probabilities.
double bayes_factor(double log_evidence_m, double log_evidence_other);

}  // namespace plugsmc

#endif  // PLUGSMC_SMC2_HPP
