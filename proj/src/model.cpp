#include "plugsmc/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "plugsmc/errors.hpp"

namespace plugsmc {

UniformPrior::UniformPrior(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw ContractViolation("prior bounds must be nonempty and of equal length");
  }
  if (!lower_.allFinite() || !upper_.allFinite()) {
    throw Unsupported("uniform prior requires finite bounds");
  }
  if ((upper_.array() < lower_.array()).any()) {
    throw ContractViolation("prior upper bound below lower bound");
  }
}

UniformPrior UniformPrior::unit_box(int dim) {
  return UniformPrior(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

UniformPrior UniformPrior::dirac(const Theta& point) { return UniformPrior(point, point); }

Theta UniformPrior::sample(Rng& rng) const {
  Theta theta(lower_.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] = lower_[i] + (upper_[i] - lower_[i]) * rng.uniform();
  }
  return theta;
}

double UniformPrior::log_density(const Theta& theta) const {
  if (theta.size() != lower_.size()) {
    throw ContractViolation("parameter dimension does not match the prior");
  }
  double out = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double width = upper_[i] - lower_[i];
    if (width == 0) {
      if (theta[i] != lower_[i]) return -std::numeric_limits<double>::infinity();
      continue;
    }
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) {
      return -std::numeric_limits<double>::infinity();
    }
    out -= std::log(width);
  }
  return out;
}

std::vector<std::string> Model::state_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < dim_x(); ++i) names.push_back("x" + std::to_string(i));
  return names;
}

void Model::sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents, const Theta& theta, Rng& rng,
                               Eigen::MatrixXd& out) const {
  out.resize(x.rows(), static_cast<Eigen::Index>(parents.size()));
  for (std::size_t k = 0; k < parents.size(); ++k) {
    sample_transition(x.col(parents[k]), theta, rng, out.col(static_cast<Eigen::Index>(k)));
  }
}

void Model::measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                     Eigen::Ref<Eigen::VectorXd> out) const {
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    out[k] = measurement_logdensity(y, x.col(k), theta);
  }
}

bool Model::has_tractable_likelihood() const {
  Rng rng(0);
  return incremental_likelihood(prior().sample(rng)) != nullptr;
}

double tractable_incremental_loglik(const Model& model, const Theta& theta, std::span<const double> y) {
  auto lik = model.incremental_likelihood(theta);
  if (!lik) {
    throw Unsupported("model '" + model.name() + "' has no tractable likelihood");
  }
  if (y.empty()) {
    throw ContractViolation("need at least one observation");
  }
  double last = 0;
  for (double yt : y) {
    last = lik->next(yt);
  }
  return last;
}

Trajectory simulate(const Model& model, const Theta& theta, int horizon, Rng& rng) {
  if (horizon < 0) {
    throw ContractViolation("horizon must be nonnegative");
  }
  Trajectory out;
  out.states.resize(model.dim_x(), horizon + 1);
  out.observations.resize(horizon + 1);
  model.sample_initial(theta, rng, out.states.col(0));
  out.observations[0] = model.sample_measurement(out.states.col(0), theta, rng);
  for (int t = 1; t <= horizon; ++t) {
    model.sample_transition(out.states.col(t - 1), theta, rng, out.states.col(t));
    out.observations[t] = model.sample_measurement(out.states.col(t), theta, rng);
  }
  return out;
}

Eigen::VectorXd prior_sd(const Prior& prior, Rng& rng, int n) {
  Eigen::MatrixXd draws(prior.dim(), n);
  for (int i = 0; i < n; ++i) {
    draws.col(i) = prior.sample(rng);
  }
  const Eigen::VectorXd mean = draws.rowwise().mean();
  return ((draws.colwise() - mean).array().square().rowwise().sum() / (n - 1)).sqrt();
}

}  // namespace plugsmc
