#ifndef PLUGSMC_ABC_HPP
#define PLUGSMC_ABC_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/model.hpp"

namespace plugsmc {

using Distance = std::function<double(std::span<const double>, std::span<const double>)>;

/// Euclidean distance between observation vectors.
double distance_euclidean(std::span<const double> simulated, std::span<const double> observed);

/// Euclidean distance between log-observations (positive data).
double distance_euclidean_log(std::span<const double> simulated, std::span<const double> observed);

struct AbcSample {
  Theta theta;
  Eigen::MatrixXd path;  ///< simulated states, dim_x x (T+1)
  double distance = 0;
};

struct AbcOptions {
  double epsilon = 1.0;
  int n_accept = 100;
  long max_attempts = 100000;
  std::uint64_t seed = 1;
  bool keep_paths = true;
};

struct AbcResult {
  std::vector<AbcSample> accepted;
  long attempts = 0;
  long prior_draws = 0;
  long simulations = 0;
  double smallest_distance = 0;

  double acceptance_rate() const {
    return attempts > 0 ? static_cast<double>(accepted.size()) / static_cast<double>(attempts) : 0.0;
  }
};

/// Rejection ABC: draw theta from the prior, simulate states and
/// observations, keep (theta, path) when distance(y_sim, y) <= epsilon. Stops
/// at n_accept acceptances or max_attempts attempts, whichever comes first.
/// Attempt i draws from its own stream, so the output is a pure function of
/// the seed. Throws ToleranceTooTight if nothing was accepted.
AbcResult abc_rejection(const Model& model, std::span<const double> y, const Distance& distance,
                        const AbcOptions& options);

}  // namespace plugsmc

#endif  // PLUGSMC_ABC_HPP
