#include "plugsmc/kalman.hpp"

#include <cmath>

#include "plugsmc/errors.hpp"

namespace plugsmc {

KalmanStream::KalmanStream(const LGParams& params) : p_(params), mean_(params.mu0), var_(params.var0) {
  validate(p_);
}

double KalmanStream::predictive_mean() const { return started_ ? p_.a * mean_ : mean_; }
double KalmanStream::predictive_var() const { return started_ ? p_.a * p_.a * var_ + p_.var_x : var_; }

double KalmanStream::next(double y) {
  if (!std::isfinite(y)) {
    throw DomainError("non-finite observation passed to the Kalman filter");
  }
  const double m = predictive_mean();
  const double v = predictive_var();
  const double s = p_.b * p_.b * v + p_.var_y;
  const double loglik = normal_logpdf(y, p_.b * m, s);
  const double gain = s > 0 ? v * p_.b / s : 0.0;
  mean_ = m + gain * (y - p_.b * m);
  var_ = (1 - gain * p_.b) * v;
  started_ = true;
  return loglik;
}

KalmanResult kalman_filter(const LGParams& params, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  KalmanResult out;
  out.filter_means.resize(n);
  out.filter_vars.resize(n);
  out.predictive_means.resize(n);
  out.predictive_vars.resize(n);
  out.incremental_logliks.resize(n);
  KalmanStream stream(params);
  for (Eigen::Index t = 0; t < n; ++t) {
    out.predictive_means[t] = stream.predictive_mean();
    out.predictive_vars[t] = stream.predictive_var();
    out.incremental_logliks[t] = stream.next(y[static_cast<std::size_t>(t)]);
    out.filter_means[t] = stream.mean();
    out.filter_vars[t] = stream.var();
  }
  out.total_loglik = out.incremental_logliks.sum();
  return out;
}

double trapezoid(const Eigen::Ref<const Eigen::VectorXd>& f, double step) {
  if (f.size() < 2) {
    return f.size() == 1 ? f[0] : 0.0;
  }
  return step * (f.sum() - 0.5 * (f[0] + f[f.size() - 1]));
}

namespace {

struct Axis {
  Eigen::VectorXd nodes;
  double step = 0;  // 0 for a point-mass coordinate
  double log_prior = 0;
};

Axis make_axis(double lo, double hi, int n) {
  Axis axis;
  if (hi == lo || n == 1) {
    axis.nodes = Eigen::VectorXd::Constant(1, hi == lo ? lo : 0.5 * (lo + hi));
    return axis;
  }
  axis.nodes = Eigen::VectorXd::LinSpaced(n, lo, hi);
  axis.step = (hi - lo) / (n - 1);
  axis.log_prior = -std::log(hi - lo);
  return axis;
}

// Integral along one axis; a point-mass axis integrates to the single value.
double integrate(const Eigen::Ref<const Eigen::VectorXd>& f, const Axis& axis) {
  return axis.step == 0 ? f[0] : trapezoid(f, axis.step);
}

}  // namespace

GridPosterior lg_posterior_reference(const LinearGaussianModel& model, std::span<const double> y, int grid_points) {
  const auto* prior = dynamic_cast<const UniformPrior*>(&model.prior());
  if (prior == nullptr) {
    throw Unsupported("grid reference needs a bounded uniform prior");
  }
  const int d = model.dim_theta();
  if (d < 1 || d > 2) {
    throw Unsupported("grid reference supports one or two free parameters");
  }
  if (grid_points < 1) {
    throw ContractViolation("grid needs at least one point");
  }

  std::vector<Axis> axes;
  for (int i = 0; i < d; ++i) {
    axes.push_back(make_axis(prior->lower()[i], prior->upper()[i], grid_points));
  }
  const Axis& ax0 = axes[0];
  const Axis ax1 = d == 2 ? axes[1] : make_axis(0, 0, 1);

  GridPosterior out;
  out.log_likelihood.resize(ax0.nodes.size(), ax1.nodes.size());
  Theta theta(d);
  for (Eigen::Index i = 0; i < ax0.nodes.size(); ++i) {
    for (Eigen::Index j = 0; j < ax1.nodes.size(); ++j) {
      theta[0] = ax0.nodes[i];
      if (d == 2) theta[1] = ax1.nodes[j];
      out.log_likelihood(i, j) = kalman_filter(model.params_at(theta), y).total_loglik;
    }
  }

  const double shift = out.log_likelihood.maxCoeff();
  const Eigen::MatrixXd lik = (out.log_likelihood.array() - shift).exp();
  // Integrate over axis 1 first, then axis 0.
  Eigen::VectorXd inner(lik.rows());
  for (Eigen::Index i = 0; i < lik.rows(); ++i) {
    inner[i] = integrate(lik.row(i).transpose(), ax1);
  }
  const double mass = integrate(inner, ax0);
  out.log_evidence = shift + std::log(mass) + ax0.log_prior + ax1.log_prior;
  out.density = lik / mass;

  out.mean.resize(d);
  out.mean[0] = integrate((inner.array() * ax0.nodes.array()).matrix(), ax0) / mass;
  if (d == 2) {
    Eigen::VectorXd inner1(lik.cols());
    for (Eigen::Index j = 0; j < lik.cols(); ++j) {
      inner1[j] = integrate(lik.col(j), ax0);
    }
    out.mean[1] = integrate((inner1.array() * ax1.nodes.array()).matrix(), ax1) / mass;
  }
  out.axes.push_back(ax0.nodes);
  if (d == 2) out.axes.push_back(ax1.nodes);
  return out;
}

}  // namespace plugsmc
