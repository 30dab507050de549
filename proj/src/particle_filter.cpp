#include "plugsmc/particle_filter.hpp"

#include <algorithm>

#include "plugsmc/errors.hpp"

namespace plugsmc {

FilterState pf_init(const Model& model, const Theta& theta, int n_particles, Rng& rng, bool keep_history) {
  if (n_particles < 1) {
    throw ContractViolation("particle filter needs at least one particle");
  }
  FilterState state;
  state.model = &model;
  state.theta = theta;
  state.keep_history = keep_history;
  state.particles.resize(model.dim_x(), n_particles);
  for (int k = 0; k < n_particles; ++k) {
    model.sample_initial(theta, rng, state.particles.col(k));
  }
  state.origins.resize(static_cast<std::size_t>(n_particles));
  for (int k = 0; k < n_particles; ++k) state.origins[static_cast<std::size_t>(k)] = k;
  state.counters.transitions = static_cast<std::uint64_t>(n_particles);
  return state;
}

void pf_step(FilterState& state, double y, ResamplingScheme scheme, Rng& rng) {
  const Model& model = *state.model;
  const int n = state.size();
  if (state.weighted) {
    const AncestorVector a = resample(scheme, state.weights.w, n, rng);
    Eigen::MatrixXd next;
    model.sample_transitions(state.particles, a, state.theta, rng, next);
    std::vector<int> origins(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      origins[static_cast<std::size_t>(k)] = state.origins[static_cast<std::size_t>(a[static_cast<std::size_t>(k)])];
    }
    if (state.keep_history) {
      state.history.push_back(std::move(state.particles));
      state.ancestors.push_back(a);
    }
    state.particles = std::move(next);
    state.origins = std::move(origins);
    state.counters.transitions += static_cast<std::uint64_t>(n);
    ++state.t;
  }

  Eigen::VectorXd logw(n);
  model.measurement_logdensities(y, state.particles, state.theta, logw);
  state.counters.measurements += static_cast<std::uint64_t>(n);
  state.weights = normalize(logw, state.t);
  state.weighted = true;
  state.cum_loglik += state.weights.log_mean;
  state.step_log_means.push_back(state.weights.log_mean);
}

FilterState run_particle_filter(const Model& model, const Theta& theta, std::span<const double> y, int n_particles,
                                ResamplingScheme scheme, Rng& rng, bool keep_history) {
  FilterState state = pf_init(model, theta, n_particles, rng, keep_history);
  for (double yt : y) {
    pf_step(state, yt, scheme, rng);
  }
  return state;
}

Eigen::MatrixXd pf_trace_path(const FilterState& state, int index) {
  if (!state.keep_history && state.t > 0) {
    throw ContractViolation("filter was created without genealogy storage");
  }
  Eigen::MatrixXd path(state.particles.rows(), state.t + 1);
  int k = index;
  path.col(state.t) = state.particles.col(k);
  for (int s = state.t - 1; s >= 0; --s) {
    k = state.ancestors[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
    path.col(s) = state.history[static_cast<std::size_t>(s)].col(k);
  }
  return path;
}

Eigen::MatrixXd pf_sample_path(const FilterState& state, Rng& rng) {
  if (!state.weighted) {
    throw ContractViolation("filter has no weights for the current time");
  }
  const AncestorVector pick = resample_multinomial(state.weights.w, 1, rng);
  return pf_trace_path(state, pick[0]);
}

int pf_unique_initial_ancestors(const FilterState& state) {
  std::vector<int> o = state.origins;
  std::sort(o.begin(), o.end());
  return static_cast<int>(std::unique(o.begin(), o.end()) - o.begin());
}

PredictiveSample pf_predict(const FilterState& state, int horizon, Rng& rng) {
  if (!state.weighted) {
    throw ContractViolation("filter has no weights for the current time");
  }
  if (horizon < 1) {
    throw ContractViolation("prediction horizon must be at least 1");
  }
  const Model& model = *state.model;
  PredictiveSample out;
  out.states = state.particles;
  Eigen::VectorXd tmp(model.dim_x());
  for (int k = 0; k < state.size(); ++k) {
    for (int step = 0; step < horizon; ++step) {
      model.sample_transition(out.states.col(k), state.theta, rng, tmp);
      out.states.col(k) = tmp;
    }
  }
  out.observations.resize(state.size());
  for (int k = 0; k < state.size(); ++k) {
    out.observations[k] = model.sample_measurement(out.states.col(k), state.theta, rng);
  }
  out.weights = state.weights.w;
  return out;
}

}  // namespace plugsmc
