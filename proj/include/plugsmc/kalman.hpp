#ifndef PLUGSMC_KALMAN_HPP
#define PLUGSMC_KALMAN_HPP

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/linear_gaussian.hpp"

namespace plugsmc {

struct KalmanResult {
  Eigen::VectorXd filter_means;
  Eigen::VectorXd filter_vars;
  Eigen::VectorXd predictive_means;  ///< E[x_t | y_{0:t-1}]
  Eigen::VectorXd predictive_vars;
  Eigen::VectorXd incremental_logliks;
  double total_loglik = 0;
};

/// Scalar Kalman filter over y_0..y_T.
KalmanResult kalman_filter(const LGParams& params, std::span<const double> y);

/// Streaming form of the same recursion: one observation per call.
class KalmanStream final : public IncrementalLikelihood {
 public:
  explicit KalmanStream(const LGParams& params);

  double next(double y) override;
  std::unique_ptr<IncrementalLikelihood> clone() const override {
    return std::make_unique<KalmanStream>(*this);
  }

  /// Filtering moments after the last update (prior moments before any update).
  double mean() const { return mean_; }
  double var() const { return var_; }
  /// One-step predictive moments of the next state.
  double predictive_mean() const;
  double predictive_var() const;

 private:
  LGParams p_;
  double mean_;
  double var_;
  bool started_ = false;
};

/// Posterior of a linear-Gaussian model's free parameters on a tensor grid.
struct GridPosterior {
  std::vector<Eigen::VectorXd> axes;  ///< one axis per free parameter
  Eigen::MatrixXd density;            ///< normalized density; column vector for 1-D
  Eigen::MatrixXd log_likelihood;
  Eigen::VectorXd mean;               ///< posterior mean per parameter
  double log_evidence = 0;            ///< log of prior-weighted integral of the likelihood
};

/// Grid reference for models with one or two free parameters and a bounded
/// uniform prior: prior x exp(Kalman log-likelihood), trapezoid-normalized.
/// A point-mass coordinate contributes a single node.
GridPosterior lg_posterior_reference(const LinearGaussianModel& model, std::span<const double> y,
                                     int grid_points);

/// Trapezoid rule on a uniform grid.
double trapezoid(const Eigen::Ref<const Eigen::VectorXd>& f, double step);

}  // namespace plugsmc

#endif  // PLUGSMC_KALMAN_HPP
