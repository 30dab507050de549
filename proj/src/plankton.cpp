#include "plugsmc/plankton.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "plugsmc/errors.hpp"

namespace plugsmc {

namespace {

inline double exp_of(double x) { return std::exp(x); }

template <typename Derived>
auto exp_of(const Eigen::ArrayBase<Derived>& x) {
  return x.exp();
}

long checked_step_count(double duration, double step) {
  if (!(step > 0) || !(duration >= 0)) {
    throw ContractViolation("RK4 step must be positive and duration nonnegative");
  }
  const double ratio = duration / step;
  const long n_steps = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw ContractViolation("duration must be an integer multiple of the RK4 step");
  }
  return n_steps;
}

/// RK4 on the log system for a scalar or an Eigen array of independent
/// states. `alpha` has the same shape as `lp` and `lz`.
template <typename T>
void rk4_lv_integrate(T& lp, T& lz, const T& alpha, double m_l, double m_q, long n_steps, double h,
                      const LvCoefficients& coef) {
  const double c = coef.clearance;
  const double ec = coef.efficiency * coef.clearance;
  T z = lz, k1p = lp, k1z = lz, k2p = lp, k2z = lz, k3p = lp, k3z = lz, k4p = lp, k4z = lz, tp = lp, tz = lz;
  const auto field = [&](const T& logp, const T& logz, T& dp, T& dz) {
    z = exp_of(logz);
    dp = alpha - c * z;
    dz = ec * exp_of(logp) - m_l - m_q * z;
  };
  for (long i = 0; i < n_steps; ++i) {
    field(lp, lz, k1p, k1z);
    tp = lp + 0.5 * h * k1p;
    tz = lz + 0.5 * h * k1z;
    field(tp, tz, k2p, k2z);
    tp = lp + 0.5 * h * k2p;
    tz = lz + 0.5 * h * k2z;
    field(tp, tz, k3p, k3z);
    tp = lp + h * k3p;
    tz = lz + h * k3z;
    field(tp, tz, k4p, k4z);
    lp += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
    lz += h / 6 * (k1z + 2 * k2z + 2 * k3z + k4z);
  }
}

}  // namespace

LogPZ rk4_lv_step(LogPZ state, double alpha, double m_l, double m_q, double duration, double step,
                  LvCoefficients coefficients) {
  const long n_steps = checked_step_count(duration, step);
  double lp = state.logp;
  double lz = state.logz;
  rk4_lv_integrate(lp, lz, alpha, m_l, m_q, n_steps, step, coefficients);
  if (!std::isfinite(lp) || !std::isfinite(lz)) {
    throw IntegratorDivergence("RK4 produced a non-finite plankton state");
  }
  return {lp, lz};
}

void rk4_lv_step(Eigen::ArrayXd& logp, Eigen::ArrayXd& logz, const Eigen::ArrayXd& alpha, double m_l, double m_q,
                 double duration, double step, LvCoefficients coefficients) {
  if (logp.size() != logz.size() || logp.size() != alpha.size()) {
    throw ContractViolation("batched RK4 arrays must have equal length");
  }
  const long n_steps = checked_step_count(duration, step);
  rk4_lv_integrate(logp, logz, alpha, m_l, m_q, n_steps, step, coefficients);
  if (!logp.allFinite() || !logz.allFinite()) {
    throw IntegratorDivergence("RK4 produced a non-finite plankton state");
  }
}

PZModel::PZModel(PZVariant variant, double rk4_step, LvCoefficients coefficients, PZInitial initial)
    : variant_(variant), step_(rk4_step), coef_(coefficients), init_(initial) {
  if (!(rk4_step > 0) || std::abs(1.0 / rk4_step - std::round(1.0 / rk4_step)) > 1e-9 / rk4_step) {
    throw ContractViolation("RK4 step must divide one day");
  }
  prior_ = std::make_shared<UniformPrior>(UniformPrior::unit_box(dim_theta()));
}

Theta PZModel::reference_theta(PZVariant variant) {
  Theta theta(5);
  theta << 0.7, 0.5, 0.2, 0.1, 0.1;
  return theta.head(variant == PZVariant::full ? 5 : 4);
}

std::vector<std::string> PZModel::parameter_names() const {
  std::vector<std::string> names{"mu_alpha", "sigma_alpha", "sigma_y", "m_l"};
  if (variant_ == PZVariant::full) names.emplace_back("m_q");
  return names;
}

void PZModel::sample_initial(const Theta& theta, Rng& rng, StateRef out) const {
  out[0] = rng.normal(theta[0], theta[1]);
  out[1] = rng.normal(init_.mu_logp, init_.sd_logp);
  out[2] = rng.normal(init_.mu_logz, init_.sd_logz);
}

void PZModel::sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const {
  const double alpha = rng.normal(theta[0], theta[1]);
  const LogPZ next = rk4_lv_step({x[1], x[2]}, alpha, theta[3], quadratic_mortality(theta), 1.0, step_, coef_);
  out[0] = alpha;
  out[1] = next.logp;
  out[2] = next.logz;
}

void PZModel::sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents, const Theta& theta,
                                 Rng& rng, Eigen::MatrixXd& out) const {
  const auto n = static_cast<Eigen::Index>(parents.size());
  Eigen::ArrayXd alpha(n), logp(n), logz(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    alpha[k] = rng.normal(theta[0], theta[1]);
    logp[k] = x(1, parents[static_cast<std::size_t>(k)]);
    logz[k] = x(2, parents[static_cast<std::size_t>(k)]);
  }
  rk4_lv_step(logp, logz, alpha, theta[3], quadratic_mortality(theta), 1.0, step_, coef_);
  out.resize(3, n);
  out.row(0) = alpha.matrix().transpose();
  out.row(1) = logp.matrix().transpose();
  out.row(2) = logz.matrix().transpose();
}

void PZModel::measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                       Eigen::Ref<Eigen::VectorXd> out) const {
  if (!(y > 0)) {
    throw DomainError("plankton observations must be positive");
  }
  const double sd = theta[2];
  const Eigen::ArrayXd r = std::log(y) - x.row(1).transpose().array();
  if (sd == 0) {
    out = (r == 0).select(Eigen::ArrayXd::Zero(r.size()), -std::numeric_limits<double>::infinity()).matrix();
    return;
  }
  const double norm = -std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
  out = (norm - 0.5 / (sd * sd) * r.square()).matrix();
}

double PZModel::measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const {
  if (!(y > 0)) {
    throw DomainError("plankton observations must be positive");
  }
  const double sd = theta[2];
  const double r = std::log(y) - x[1];
  if (sd == 0) {
    return r == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return -std::log(sd) - 0.5 * std::log(2 * std::numbers::pi) - 0.5 * (r * r) / (sd * sd);
}

double PZModel::sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const {
  return std::exp(rng.normal(x[1], theta[2]));
}

PZVariant parse_pz_variant(std::string_view name) {
  if (name == "pz") return PZVariant::full;
  if (name == "pzstar") return PZVariant::no_quadratic_mortality;
  throw UsageError("model", "unknown plankton model '" + std::string(name) + "'");
}

}  // namespace plugsmc
