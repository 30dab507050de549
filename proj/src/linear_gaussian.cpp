#include "plugsmc/linear_gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "plugsmc/errors.hpp"
#include "plugsmc/kalman.hpp"

namespace plugsmc {

void validate(const LGParams& p) {
  auto check = [](double v, const char* name) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw ContractViolation(std::string("linear-Gaussian variance ") + name + " must be finite and >= 0");
    }
  };
  check(p.var0, "var0");
  check(p.var_x, "var_x");
  check(p.var_y, "var_y");
  if (!std::isfinite(p.mu0) || !std::isfinite(p.a) || !std::isfinite(p.b)) {
    throw ContractViolation("linear-Gaussian coefficients must be finite");
  }
}

LGField parse_lg_field(std::string_view name) {
  if (name == "mu0") return LGField::mu0;
  if (name == "var0") return LGField::var0;
  if (name == "a" || name == "A") return LGField::a;
  if (name == "var_x") return LGField::var_x;
  if (name == "b" || name == "B") return LGField::b;
  if (name == "var_y") return LGField::var_y;
  throw UsageError("lg_free", "unknown linear-Gaussian field '" + std::string(name) + "'");
}

std::string_view to_string(LGField field) {
  switch (field) {
    case LGField::mu0: return "mu0";
    case LGField::var0: return "var0";
    case LGField::a: return "a";
    case LGField::var_x: return "var_x";
    case LGField::b: return "b";
    case LGField::var_y: return "var_y";
  }
  return "?";
}

double normal_logpdf(double x, double mean, double var) {
  if (var == 0) {
    return x == mean ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double r = x - mean;
  return -0.5 * (std::log(2 * std::numbers::pi * var) + r * r / var);
}

LinearGaussianModel::LinearGaussianModel(LGParams base, std::vector<LGField> free,
                                         std::shared_ptr<const Prior> prior)
    : base_(base), free_(std::move(free)), prior_(std::move(prior)) {
  validate(base_);
  if (!prior_ || prior_->dim() != static_cast<int>(free_.size())) {
    throw ContractViolation("prior dimension must equal the number of free fields");
  }
}

LGParams LinearGaussianModel::params_at(const Theta& theta) const {
  LGParams p = base_;
  for (std::size_t i = 0; i < free_.size(); ++i) {
    const double v = theta[static_cast<Eigen::Index>(i)];
    switch (free_[i]) {
      case LGField::mu0: p.mu0 = v; break;
      case LGField::var0: p.var0 = v; break;
      case LGField::a: p.a = v; break;
      case LGField::var_x: p.var_x = v; break;
      case LGField::b: p.b = v; break;
      case LGField::var_y: p.var_y = v; break;
    }
  }
  return p;
}

std::vector<std::string> LinearGaussianModel::parameter_names() const {
  std::vector<std::string> names;
  for (auto f : free_) names.emplace_back(to_string(f));
  return names;
}

void LinearGaussianModel::sample_initial(const Theta& theta, Rng& rng, StateRef out) const {
  const LGParams p = params_at(theta);
  out[0] = p.mu0 + std::sqrt(p.var0) * rng.normal();
}

void LinearGaussianModel::sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const {
  const LGParams p = params_at(theta);
  out[0] = p.a * x[0] + std::sqrt(p.var_x) * rng.normal();
}

double LinearGaussianModel::measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const {
  const LGParams p = params_at(theta);
  return normal_logpdf(y, p.b * x[0], p.var_y);
}

double LinearGaussianModel::sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const {
  const LGParams p = params_at(theta);
  return p.b * x[0] + std::sqrt(p.var_y) * rng.normal();
}

void LinearGaussianModel::sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents,
                                             const Theta& theta, Rng& rng, Eigen::MatrixXd& out) const {
  const LGParams p = params_at(theta);
  const double sd = std::sqrt(p.var_x);
  out.resize(1, static_cast<Eigen::Index>(parents.size()));
  for (std::size_t k = 0; k < parents.size(); ++k) {
    out(0, static_cast<Eigen::Index>(k)) = p.a * x(0, parents[k]) + sd * rng.normal();
  }
}

void LinearGaussianModel::measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                                   Eigen::Ref<Eigen::VectorXd> out) const {
  const LGParams p = params_at(theta);
  if (p.var_y == 0) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) out[k] = normal_logpdf(y, p.b * x(0, k), 0.0);
    return;
  }
  const double norm = -0.5 * std::log(2 * std::numbers::pi * p.var_y);
  out = (norm - 0.5 / p.var_y * (y - p.b * x.row(0).transpose().array()).square()).matrix();
}

std::unique_ptr<IncrementalLikelihood> LinearGaussianModel::incremental_likelihood(const Theta& theta) const {
  return std::make_unique<KalmanStream>(params_at(theta));
}

}  // namespace plugsmc
