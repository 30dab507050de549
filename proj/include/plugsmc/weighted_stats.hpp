#ifndef PLUGSMC_WEIGHTED_STATS_HPP
#define PLUGSMC_WEIGHTED_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/errors.hpp"

namespace plugsmc {

/// Weighted mean of the columns of `points` (weights normalized).
template <typename DerivedX, typename DerivedW>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> weighted_mean(const Eigen::MatrixBase<DerivedX>& points,
                                                                          const Eigen::MatrixBase<DerivedW>& w) {
  return points * w;
}

/// Weighted (population) covariance of the columns of `points`.
template <typename DerivedX, typename DerivedW>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> weighted_covariance(
    const Eigen::MatrixBase<DerivedX>& points, const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu = points * w;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centred = points.colwise() - mu;
  return centred * w.asDiagonal() * centred.transpose();
}

/// Weighted quantile with a midpoint convention: when the cumulative weight
/// lands on `level` exactly (within 1e-10), the result is the average of that
/// value and the next larger one. Uniform weights over 1..100 give a median
/// of 50.5.
template <typename DerivedV, typename DerivedW>
typename DerivedV::Scalar weighted_quantile(const Eigen::MatrixBase<DerivedV>& values,
                                            const Eigen::MatrixBase<DerivedW>& weights, double level) {
  const auto n = values.size();
  if (n == 0 || weights.size() != n) {
    throw ContractViolation("weighted quantile needs matching nonempty inputs");
  }
  if (!(level >= 0 && level <= 1)) {
    throw ContractViolation("quantile level must lie in [0, 1]");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  const double total = weights.sum();
  constexpr double tie = 1e-10;
  double acc = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double wi = weights[order[i]] / total;
    if (wi <= 0) continue;
    acc += wi;
    if (std::abs(acc - level) <= tie) {
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        if (weights[order[j]] > 0) return 0.5 * (values[order[i]] + values[order[j]]);
      }
      return values[order[i]];
    }
    if (acc > level) return values[order[i]];
  }
  // level == 1 (or rounding): largest value with positive weight
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (weights[*it] > 0) return values[*it];
  }
  throw ContractViolation("weighted quantile needs a positive total weight");
}

}  // namespace plugsmc

#endif  // PLUGSMC_WEIGHTED_STATS_HPP
