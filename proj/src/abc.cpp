#include "plugsmc/abc.hpp"

#include <cmath>
#include <limits>

#include "plugsmc/errors.hpp"

namespace plugsmc {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError("distance between observation vectors of different lengths");
  }
}

}  // namespace

double distance_euclidean(std::span<const double> simulated, std::span<const double> observed) {
  require_same_length(simulated, observed);
  double acc = 0;
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    const double r = simulated[i] - observed[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

double distance_euclidean_log(std::span<const double> simulated, std::span<const double> observed) {
  require_same_length(simulated, observed);
  double acc = 0;
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    if (!(simulated[i] > 0) || !(observed[i] > 0)) {
      throw DomainError("log distance needs positive observations");
    }
    const double r = std::log(simulated[i]) - std::log(observed[i]);
    acc += r * r;
  }
  return std::sqrt(acc);
}

AbcResult abc_rejection(const Model& model, std::span<const double> y, const Distance& distance,
                        const AbcOptions& options) {
  if (!(options.epsilon >= 0)) {
    throw ContractViolation("ABC tolerance must be nonnegative");
  }
  if (options.n_accept < 1 || options.max_attempts < options.n_accept) {
    throw ContractViolation("ABC needs 1 <= n_accept <= max_attempts");
  }
  if (y.empty()) {
    throw ContractViolation("ABC needs at least one observation");
  }
  const int horizon = static_cast<int>(y.size()) - 1;

  AbcResult result;
  result.smallest_distance = std::numeric_limits<double>::infinity();
  while (result.attempts < options.max_attempts && static_cast<int>(result.accepted.size()) < options.n_accept) {
    Rng rng = Rng::stream(options.seed, StreamPurpose::abc, static_cast<std::uint64_t>(result.attempts));
    ++result.attempts;
    Theta theta = model.prior().sample(rng);
    ++result.prior_draws;
    Trajectory sim;
    double d = std::numeric_limits<double>::infinity();
    try {
      sim = simulate(model, theta, horizon, rng);
      d = distance(std::span<const double>(sim.observations.data(), y.size()), y);
    } catch (const IntegratorDivergence&) {
      // a diverged simulation is a rejected attempt
    }
    ++result.simulations;
    result.smallest_distance = std::min(result.smallest_distance, d);
    if (d <= options.epsilon) {
      AbcSample sample{std::move(theta), {}, d};
      if (options.keep_paths) sample.path = std::move(sim.states);
      result.accepted.push_back(std::move(sample));
    }
  }
  if (result.accepted.empty()) {
    throw ToleranceTooTight(result.smallest_distance, result.attempts);
  }
  return result;
}

}  // namespace plugsmc
