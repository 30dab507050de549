#ifndef PLUGSMC_PARTICLE_FILTER_HPP
#define PLUGSMC_PARTICLE_FILTER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plugsmc/model.hpp"
#include "plugsmc/resampling.hpp"

namespace plugsmc {

/// Number of model calls made by a filter.
struct CallCounters {
  std::uint64_t transitions = 0;   ///< draws from f (initial draws included)
  std::uint64_t measurements = 0;  ///< evaluations of g

  CallCounters& operator+=(const CallCounters& other) {
    transitions += other.transitions;
    measurements += other.measurements;
    return *this;
  }
};

/// Live state of one bootstrap particle filter.
///
/// The filter is lazy about propagation: after assimilating y_t it holds the
/// weighted sample (x_t, w_t); resampling and the move to t+1 happen at the
/// start of the next step. After assimilating y_0..y_t it has therefore made
/// exactly N (t+1) transition draws and N (t+1) measurement evaluations.
struct FilterState {
  const Model* model = nullptr;
  Theta theta;
  int t = 0;                 ///< time index of `particles`
  bool weighted = false;     ///< whether `weights` refer to `particles`
  Eigen::MatrixXd particles;  ///< dim_x x N
  WeightVector weights;
  double cum_loglik = 0;     ///< log of the running likelihood estimate
  std::vector<double> step_log_means;
  std::vector<int> origins;  ///< time-0 ancestor of each current particle
  bool keep_history = true;
  std::vector<Eigen::MatrixXd> history;   ///< particles at every past time, when kept
  std::vector<AncestorVector> ancestors;  ///< ancestors[s]: parents (at s) of the particles at s+1
  CallCounters counters;

  int size() const { return static_cast<int>(particles.cols()); }
};

/// Draws N initial particles. Nothing is weighted yet.
FilterState pf_init(const Model& model, const Theta& theta, int n_particles, Rng& rng, bool keep_history = true);

/// Assimilates the next observation: resample + propagate (unless fresh from
/// pf_init), then weight against y. Throws ParticleCollapse carrying t when
/// every weight is zero.
void pf_step(FilterState& state, double y, ResamplingScheme scheme, Rng& rng);

/// Runs pf_init and one pf_step per observation.
FilterState run_particle_filter(const Model& model, const Theta& theta, std::span<const double> y, int n_particles,
                                ResamplingScheme scheme, Rng& rng, bool keep_history = true);

/// Weighted average of phi over the current particles.
template <typename Phi>
double pf_estimate(const FilterState& state, Phi&& phi) {
  if (!state.weighted) {
    throw ContractViolation("filter has no weights for the current time");
  }
  double acc = 0;
  for (int k = 0; k < state.size(); ++k) {
    const double wk = state.weights.w[k];
    if (wk > 0) {
      acc += wk * phi(state.particles.col(k));
    }
  }
  return acc;
}

/// Draws one index proportional to the current weights and returns its
/// ancestral path, dim_x x (t+1).
Eigen::MatrixXd pf_sample_path(const FilterState& state, Rng& rng);

/// Path of a given current particle index.
Eigen::MatrixXd pf_trace_path(const FilterState& state, int index);

/// Distinct time-0 ancestors among the current particles.
int pf_unique_initial_ancestors(const FilterState& state);

struct PredictiveSample {
  Eigen::MatrixXd states;        ///< dim_x x N at time t+k
  Eigen::VectorXd observations;  ///< one draw per particle
  Eigen::VectorXd weights;       ///< the filter's current normalized weights
};

/// Propagates every particle k steps through the transition and draws one
/// observation each, carrying the current weights.
PredictiveSample pf_predict(const FilterState& state, int horizon, Rng& rng);

}  // namespace plugsmc

#endif  // PLUGSMC_PARTICLE_FILTER_HPP
