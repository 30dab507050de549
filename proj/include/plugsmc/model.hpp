#ifndef PLUGSMC_MODEL_HPP
#define PLUGSMC_MODEL_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/rng.hpp"

namespace plugsmc {

using Theta = Eigen::VectorXd;
using StateRef = Eigen::Ref<Eigen::VectorXd>;
using ConstStateRef = Eigen::Ref<const Eigen::VectorXd>;

/// Parameter prior: sampling plus log-density (-inf outside the support).
class Prior {
 public:
  virtual ~Prior() = default;
  virtual int dim() const = 0;
  virtual Theta sample(Rng& rng) const = 0;
  virtual double log_density(const Theta& theta) const = 0;
};

/// Independent uniforms on [lower_i, upper_i]. A coordinate with
/// lower == upper is a point mass.
class UniformPrior final : public Prior {
 public:
  UniformPrior(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static UniformPrior unit_box(int dim);
  static UniformPrior dirac(const Theta& point);

  int dim() const override { return static_cast<int>(lower_.size()); }
  Theta sample(Rng& rng) const override;
  double log_density(const Theta& theta) const override;

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

 private:
  Eigen::VectorXd lower_, upper_;
};

/// Exact one-step predictive likelihood p(y_t | y_{0:t-1}, theta) fed one
/// observation at a time.
class IncrementalLikelihood {
 public:
  virtual ~IncrementalLikelihood() = default;
  /// Consumes y_t and returns log p(y_t | y_{0:t-1}, theta).
  virtual double next(double y) = 0;
  virtual std::unique_ptr<IncrementalLikelihood> clone() const = 0;
};

/// The plug-and-play model contract. Observations are scalar; states are
/// column vectors of length dim_x(). Implementations are immutable and may be
/// shared between threads; all randomness enters through the Rng argument.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int dim_x() const = 0;
  int dim_y() const { return 1; }
  virtual int dim_theta() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;
  /// Names of the state coordinates; x0, x1, ... unless overridden.
  virtual std::vector<std::string> state_names() const;
  virtual const Prior& prior() const = 0;

  virtual void sample_initial(const Theta& theta, Rng& rng, StateRef out) const = 0;
  virtual void sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const = 0;
  virtual double measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const = 0;
  virtual double sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const = 0;

  /// Batch transition: out.col(k) ~ f(. | x.col(parents[k]), theta), drawing
  /// randomness in the order k = 0, 1, ... The default loops over
  /// sample_transition; models override it to vectorize.
  virtual void sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents, const Theta& theta,
                                  Rng& rng, Eigen::MatrixXd& out) const;
  /// Batch measurement log-densities of y at every column of x.
  virtual void measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                        Eigen::Ref<Eigen::VectorXd> out) const;

  /// Exact incremental likelihood, or nullptr for implicit models.
  virtual std::unique_ptr<IncrementalLikelihood> incremental_likelihood(const Theta& /*theta*/) const {
    return nullptr;
  }
  bool has_tractable_likelihood() const;
};

/// log p(y_t | y_{0:t-1}, theta) with t = y.size() - 1, by replaying the
/// observations through the model's exact likelihood. Throws Unsupported for
/// implicit models.
double tractable_incremental_loglik(const Model& model, const Theta& theta, std::span<const double> y);

struct Trajectory {
  Eigen::MatrixXd states;    ///< dim_x x (T+1)
  Eigen::VectorXd observations;  ///< T+1
};

/// Forward draw of (x_{0:T}, y_{0:T}).
Trajectory simulate(const Model& model, const Theta& theta, int horizon, Rng& rng);

/// Empirical prior standard deviation from n draws.
Eigen::VectorXd prior_sd(const Prior& prior, Rng& rng, int n = 4000);

}  // namespace plugsmc

#endif  // PLUGSMC_MODEL_HPP
