#include "plugsmc/resampling.hpp"

#include <algorithm>
#include <string>

namespace plugsmc {

namespace {

constexpr double kNormalizationTolerance = 1e-9;

void require_normalized(const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() == 0) {
    throw ContractViolation("weights must be nonempty");
  }
  if (!w.allFinite() || (w.array() < 0).any() || std::abs(w.sum() - 1.0) > kNormalizationTolerance) {
    throw ContractViolation("weights must be nonnegative and sum to one");
  }
}

// Cumulative weights; every entry from the last positive weight onward is
// pinned to exactly 1 so that rounding never selects a zero-weight tail.
std::vector<double> cumulative(const Eigen::Ref<const Eigen::VectorXd>& w) {
  std::vector<double> cdf(static_cast<std::size_t>(w.size()));
  double acc = 0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w[i];
    cdf[static_cast<std::size_t>(i)] = acc;
    if (w[i] > 0) {
      last_positive = i;
    }
  }
  std::fill(cdf.begin() + last_positive, cdf.end(), 1.0);
  return cdf;
}

}  // namespace

ResamplingScheme parse_scheme(std::string_view name) {
  if (name == "systematic") return ResamplingScheme::systematic;
  if (name == "multinomial") return ResamplingScheme::multinomial;
  throw UsageError("scheme", "unknown resampling scheme '" + std::string(name) + "'");
}

std::string_view to_string(ResamplingScheme scheme) {
  return scheme == ResamplingScheme::systematic ? "systematic" : "multinomial";
}

WeightVector normalize(const Eigen::Ref<const Eigen::VectorXd>& logw, int t) {
  if (logw.size() == 0) {
    throw ContractViolation("cannot normalize an empty weight list");
  }
  if (logw.hasNaN()) {
    throw InvalidWeight("NaN log-weight");
  }
  if ((logw.array() == std::numeric_limits<double>::infinity()).any()) {
    throw InvalidWeight("+inf log-weight");
  }
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse)) {
    throw ParticleCollapse(t);
  }
  WeightVector out;
  out.logw = logw;
  out.w = (logw.array() - lse).exp();
  // Guard the invariant against accumulated rounding.
  out.w /= out.w.sum();
  out.log_mean = lse - std::log(static_cast<double>(logw.size()));
  return out;
}

double ess(const Eigen::Ref<const Eigen::VectorXd>& w) {
  require_normalized(w);
  return 1.0 / (static_cast<double>(w.size()) * w.squaredNorm());
}

AncestorVector resample_multinomial(const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng) {
  require_normalized(w);
  const auto cdf = cumulative(w);
  AncestorVector a(static_cast<std::size_t>(n));
  for (auto& ak : a) {
    const double u = rng.uniform();
    ak = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
  return a;
}

AncestorVector resample_systematic(const Eigen::Ref<const Eigen::VectorXd>& w, int n, double u) {
  require_normalized(w);
  if (!(u >= 0 && u < 1)) {
    throw ContractViolation("systematic offset must lie in [0, 1)");
  }
  const auto cdf = cumulative(w);
  AncestorVector a(static_cast<std::size_t>(n));
  std::size_t j = 0;
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double point = (u + i) * inv_n;
    // Strict comparison: a point exactly on a boundary goes to the next index.
    while (!(point < cdf[j])) {
      ++j;
    }
    a[static_cast<std::size_t>(i)] = static_cast<int>(j);
  }
  return a;
}

AncestorVector resample_systematic(const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng) {
  return resample_systematic(w, n, rng.uniform());
}

AncestorVector resample(ResamplingScheme scheme, const Eigen::Ref<const Eigen::VectorXd>& w, int n, Rng& rng) {
  return scheme == ResamplingScheme::systematic ? resample_systematic(w, n, rng) : resample_multinomial(w, n, rng);
}

std::vector<int> offspring_counts(const AncestorVector& a, int n_parents) {
  std::vector<int> counts(static_cast<std::size_t>(n_parents), 0);
  for (int ak : a) {
    ++counts[static_cast<std::size_t>(ak)];
  }
  return counts;
}

}  // namespace plugsmc
