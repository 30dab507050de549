#ifndef PLUGSMC_SMC_SAMPLER_HPP
#define PLUGSMC_SMC_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/model.hpp"
#include "plugsmc/pmmh.hpp"
#include "plugsmc/resampling.hpp"

namespace plugsmc {

/// Independent Gaussian proposal from the weighted mean and covariance of a
/// parameter cloud (columns of `theta`). The covariance diagonal gets a jitter
/// of 1e-6 * trace / d (1e-6 when the trace is zero).
ProposalSpec fit_gaussian_proposal(const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                   const Eigen::Ref<const Eigen::VectorXd>& w);

struct SamplerConfig {
  int n_theta = 1000;
  double ess_threshold = 0.5;
  int n_moves = 5;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// One row of the sampler's diagnostic trace.
struct SamplerStep {
  int t = 0;
  double ess = 1;              ///< ESS of the weights after assimilating y_t
  bool rejuvenated = false;
  double ess_before = 1;       ///< ESS that triggered (or not) the rejuvenation
  double ess_after_reset = 1;  ///< ESS right after resampling; 1 when rejuvenated
  double acceptance_rate = 0;  ///< mean MH acceptance of this step's moves
  double log_evidence_increment = 0;
  double log_evidence = 0;
};

/// Weighted parameter population of the exact-likelihood SMC sampler.
struct ThetaCloudTractable {
  Eigen::MatrixXd theta;        ///< dim_theta x N
  WeightVector weights;
  Eigen::VectorXd log_likelihood;  ///< log p(y_{0:t} | theta_k)
  double log_evidence = 0;
  std::vector<SamplerStep> trace;
};

/// n_moves Metropolis-Hastings steps with proposal q on every column of
/// `theta`, targeting prior x p(past | theta). `log_lik` and `log_prior` hold
/// the current values per column and are updated with accepted moves. Column
/// k draws from its own stream of `seed`. Returns the mean acceptance rate.
double tractable_mh_moves(const Model& model, std::span<const double> past, const ProposalSpec& q, int n_moves,
                          std::uint64_t seed, Eigen::MatrixXd& theta, Eigen::VectorXd& log_lik,
                          Eigen::VectorXd& log_prior, int workers = 1);

using SamplerObserver = std::function<void(int t, const ThetaCloudTractable&)>;

/// Adaptive SMC sampler for models with an exact incremental likelihood.
/// Rejuvenates (systematic resampling + n_moves independent-proposal MH
/// steps targeting the previous posterior) whenever the ESS of the previous
/// weights falls below the threshold.
ThetaCloudTractable smc_sampler_run(const Model& model, std::span<const double> y, const SamplerConfig& config,
                                    const SamplerObserver& observer = {});

}  // namespace plugsmc

#endif  // PLUGSMC_SMC_SAMPLER_HPP
