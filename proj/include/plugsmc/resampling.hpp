#ifndef PLUGSMC_RESAMPLING_HPP
#define PLUGSMC_RESAMPLING_HPP

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/errors.hpp"
#include "plugsmc/rng.hpp"

namespace plugsmc {

/// Normalized view of a set of log-weights.
struct WeightVector {
  Eigen::VectorXd logw;  ///< unnormalized log-weights
  Eigen::VectorXd w;     ///< normalized, sums to one
  double log_mean = 0;   ///< log of the arithmetic mean of exp(logw)

  Eigen::Index size() const { return w.size(); }

  static WeightVector uniform(Eigen::Index n) {
    WeightVector out;
    out.logw = Eigen::VectorXd::Zero(n);
    out.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    out.log_mean = 0;
    return out;
  }
};

/// Indices of the resampled parents, one per offspring.
using AncestorVector = std::vector<int>;

enum class ResamplingScheme { multinomial, systematic };

ResamplingScheme parse_scheme(std::string_view name);
std::string_view to_string(ResamplingScheme scheme);

/// log(sum(exp(x))) with the shift-by-max trick. Returns -inf for an all -inf input.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// Log-sum-exp normalization. Throws ParticleCollapse if every entry is -inf and
/// InvalidWeight on NaN or +inf. `t` only labels the collapse error.
WeightVector normalize(const Eigen::Ref<const Eigen::VectorXd>& logw, int t = -1);

/// Effective sample size as a fraction of N: 1 / (N * sum(w^2)).
double ess(const Eigen::Ref<const Eigen::VectorXd>& w);

AncestorVector resample_multinomial(const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng);

/// Systematic resampling with an explicit offset u in [0, 1).
AncestorVector resample_systematic(const Eigen::Ref<const Eigen::VectorXd>& w, int n, double u);
AncestorVector resample_systematic(const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng);

AncestorVector resample(ResamplingScheme scheme, const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng);

/// Per-index offspring counts of an ancestor vector.
std::vector<int> offspring_counts(const AncestorVector& a, int n_parents);

}  // namespace plugsmc

#endif  // PLUGSMC_RESAMPLING_HPP
