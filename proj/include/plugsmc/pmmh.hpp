#ifndef PLUGSMC_PMMH_HPP
#define PLUGSMC_PMMH_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "plugsmc/model.hpp"
#include "plugsmc/particle_filter.hpp"

namespace plugsmc {

/// Gaussian proposal for Metropolis-Hastings moves on theta.
///
/// random_walk:  theta* = theta + scale * L z
/// independent:  theta* = mean + L z
/// with L L' = covariance. A random walk with a zero covariance is allowed
/// (the chain proposes its current value); an independent proposal needs a
/// positive definite covariance because its density enters the MH ratio.
class ProposalSpec {
 public:
  enum class Kind { random_walk, independent };

  static ProposalSpec random_walk(Eigen::MatrixXd covariance, double scale = 1.0);
  static ProposalSpec independent(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  /// Random walk with scale 2.38 / sqrt(d) and a diagonal covariance built
  /// from the empirical prior standard deviations.
  static ProposalSpec default_random_walk(const Prior& prior, Rng& rng);

  Kind kind() const { return kind_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double scale() const { return scale_; }
  bool symmetric() const { return kind_ == Kind::random_walk; }

  Theta draw(const Theta& current, Rng& rng) const;
  /// log q(to | from).
  double log_density(const Theta& to, const Theta& from) const;

 private:
  ProposalSpec(Kind kind, Eigen::VectorXd mean, Eigen::MatrixXd covariance, double scale);

  Kind kind_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  double scale_;
  Eigen::MatrixXd factor_;  // lower Cholesky factor
  double log_det_ = 0;
};

/// log of min(1, Z* p* q(theta|theta*) / (Z p q(theta*|theta))). Returns -inf
/// when the proposal has zero prior density or a zero likelihood estimate.
double mh_log_accept(double log_z_prop, double log_prior_prop, double log_q_reverse, double log_z, double log_prior,
                     double log_q_forward);

struct PmmhChainState {
  Theta theta;
  double log_z = 0;
  double log_prior = 0;
  Eigen::MatrixXd path;  ///< empty unless paths are kept
  bool accepted = false; ///< whether this state came from an accepted proposal
};

struct PmmhOptions {
  int n_particles = 500;
  int n_iters = 1000;  ///< chain length including the initial state
  ResamplingScheme scheme = ResamplingScheme::systematic;
  bool keep_paths = true;
  std::uint64_t seed = 1;
};

struct PmmhResult {
  std::vector<PmmhChainState> chain;
  double acceptance_rate = 0;
  int collapsed_proposals = 0;
  CallCounters counters;

  /// Chain values of one parameter coordinate, after `burn_in` states.
  Eigen::VectorXd trace(int coordinate, int burn_in = 0) const;
};

/// Particle marginal Metropolis-Hastings over y_0..y_T. Each iteration runs one
/// fresh filter for the proposed theta; a collapsed proposal filter is a
/// rejection.
PmmhResult pmmh_run(const Model& model, std::span<const double> y, const ProposalSpec& proposal, const Theta& init,
                    const PmmhOptions& options);

/// Batch-means estimate of the Monte Carlo standard error of a chain mean.
double batch_means_standard_error(const Eigen::Ref<const Eigen::VectorXd>& trace, int n_batches = 50);

}  // namespace plugsmc

#endif  // PLUGSMC_PMMH_HPP
