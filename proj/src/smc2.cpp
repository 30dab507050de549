#include "plugsmc/smc2.hpp"

#include <cmath>
#include <limits>

#include "plugsmc/errors.hpp"
#include "plugsmc/parallel.hpp"
#include "plugsmc/pmmh.hpp"
#include "plugsmc/smc_sampler.hpp"
#include "plugsmc/weighted_stats.hpp"

namespace plugsmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CallCounters diff(const CallCounters& after, const CallCounters& before) {
  return {after.transitions - before.transitions, after.measurements - before.measurements};
}

}  // namespace

Eigen::MatrixXd Smc2State::theta_matrix() const {
  Eigen::MatrixXd out(model->dim_theta(), n_theta());
  for (int k = 0; k < n_theta(); ++k) out.col(k) = particles[static_cast<std::size_t>(k)].theta;
  return out;
}

Smc2State smc2_init(const Model& model, const Smc2Config& config) {
  if (config.n_theta < 1 || config.n_x < 1) {
    throw ContractViolation("SMC2 needs at least one theta-particle and one x-particle");
  }
  if (!(config.ess_threshold > 0 && config.ess_threshold < 1)) {
    throw ContractViolation("ESS threshold must lie in (0, 1)");
  }
  Smc2State state;
  state.model = &model;
  state.config = config;
  state.particles.resize(static_cast<std::size_t>(config.n_theta));
  parallel_for(config.n_theta, config.workers, [&](int k) {
    auto& p = state.particles[static_cast<std::size_t>(k)];
    Rng rng = Rng::stream(config.seed, StreamPurpose::theta_init, static_cast<std::uint64_t>(k));
    p.theta = model.prior().sample(rng);
    p.log_prior = model.prior().log_density(p.theta);
    p.filter = pf_init(model, p.theta, config.n_x, rng, config.keep_history);
  });
  for (const auto& p : state.particles) state.calls += p.filter.counters;
  state.weights = WeightVector::uniform(config.n_theta);
  return state;
}

double smc2_rejuvenate(Smc2State& state) {
  const Model& model = *state.model;
  const Smc2Config& config = state.config;
  const int n = state.n_theta();
  const int t = state.t + 1;  // rejuvenation happens before assimilating y_t

  const Eigen::MatrixXd fit_theta = state.theta_matrix();
  const Eigen::VectorXd fit_w = state.weights.w;

  Rng rs = Rng::stream(config.seed, StreamPurpose::theta_resample, static_cast<std::uint64_t>(t));
  const AncestorVector a = resample(config.theta_scheme, state.weights.w, n, rs);
  std::vector<ThetaParticle> next;
  next.reserve(static_cast<std::size_t>(n));
  for (int ak : a) next.push_back(state.particles[static_cast<std::size_t>(ak)]);
  state.particles = std::move(next);
  state.weights = WeightVector::uniform(n);

  const ProposalSpec q = (fit_w.array() > 0).count() >= 2 ? fit_gaussian_proposal(fit_theta, fit_w)
                                                          : fit_gaussian_proposal(state.theta_matrix(), state.weights.w);

  const std::span<const double> past(state.observations);
  std::vector<int> accepted(static_cast<std::size_t>(n), 0);
  std::vector<CallCounters> spent(static_cast<std::size_t>(n));
  parallel_for(n, config.workers, [&](int k) {
    auto& particle = state.particles[static_cast<std::size_t>(k)];
    Rng rng = Rng::stream(config.seed, StreamPurpose::move, static_cast<std::uint64_t>(t),
                          static_cast<std::uint64_t>(k));
    for (int m = 0; m < config.n_moves; ++m) {
      const Theta prop = q.draw(particle.theta, rng);
      const double lp = model.prior().log_density(prop);
      double log_alpha = kNegInf;
      FilterState filter;
      if (std::isfinite(lp)) {
        try {
          filter = run_particle_filter(model, prop, past, config.n_x, config.x_scheme, rng, config.keep_history);
          spent[static_cast<std::size_t>(k)] += filter.counters;
          log_alpha = mh_log_accept(filter.cum_loglik, lp, q.log_density(particle.theta, prop),
                                    particle.filter.cum_loglik, particle.log_prior, q.log_density(prop, particle.theta));
        } catch (const ParticleCollapse&) {
        } catch (const IntegratorDivergence&) {
        }
      }
      if (std::log(rng.uniform()) < log_alpha) {
        particle.theta = prop;
        particle.log_prior = lp;
        particle.filter = std::move(filter);
        ++accepted[static_cast<std::size_t>(k)];
      }
    }
  });
  long total = 0;
  for (int k = 0; k < n; ++k) {
    total += accepted[static_cast<std::size_t>(k)];
    state.calls += spent[static_cast<std::size_t>(k)];
  }
  return config.n_moves > 0 ? static_cast<double>(total) / (static_cast<double>(n) * config.n_moves) : 0.0;
}

void smc2_assimilate(Smc2State& state, double y) {
  const Smc2Config& config = state.config;
  const int n = state.n_theta();
  const int t = state.t + 1;

  Smc2Step step;
  step.t = t;
  step.ess_before = ess(state.weights.w);
  step.ess_after_reset = step.ess_before;
  if (t > 0 && step.ess_before < config.ess_threshold) {
    step.acceptance_rate = smc2_rejuvenate(state);
    step.rejuvenated = true;
    step.ess_after_reset = ess(state.weights.w);
  }

  Eigen::VectorXd inc(n);
  std::vector<CallCounters> spent(static_cast<std::size_t>(n));
  std::vector<char> newly_collapsed(static_cast<std::size_t>(n), 0);
  parallel_for(n, config.workers, [&](int k) {
    auto& particle = state.particles[static_cast<std::size_t>(k)];
    if (particle.collapsed) {
      inc[k] = kNegInf;
      return;
    }
    Rng rng = Rng::stream(config.seed, StreamPurpose::filter_step, static_cast<std::uint64_t>(k),
                          static_cast<std::uint64_t>(t));
    const CallCounters before = particle.filter.counters;
    try {
      pf_step(particle.filter, y, config.x_scheme, rng);
      inc[k] = particle.filter.weights.log_mean;
    } catch (const ParticleCollapse&) {
      particle.collapsed = true;
    } catch (const IntegratorDivergence&) {
      particle.collapsed = true;
    }
    if (particle.collapsed) {
      inc[k] = kNegInf;
      newly_collapsed[static_cast<std::size_t>(k)] = 1;
    }
    spent[static_cast<std::size_t>(k)] = diff(particle.filter.counters, before);
  });
  for (int k = 0; k < n; ++k) {
    state.calls += spent[static_cast<std::size_t>(k)];
    step.collapsed += newly_collapsed[static_cast<std::size_t>(k)];
  }

  const Eigen::VectorXd log_w = state.weights.w.array().log().matrix() + inc;
  try {
    state.weights = normalize(log_w, t);
  } catch (const ParticleCollapse&) {
    throw ParticleCollapse(t, "theta population (every attached filter)");
  }
  step.log_evidence_increment = log_sum_exp(log_w);
  state.log_evidence += step.log_evidence_increment;
  state.observations.push_back(y);
  state.t = t;

  step.log_evidence = state.log_evidence;
  step.ess = ess(state.weights.w);
  step.transitions_per_theta = static_cast<double>(state.calls.transitions) / n;
  step.measurements_per_theta = static_cast<double>(state.calls.measurements) / n;
  state.trace.push_back(step);
}

PredictiveBand smc2_predict_obs(const Smc2State& state, Rng& rng, std::vector<double> levels) {
  if (state.n_theta() == 0) {
    throw ContractViolation("prediction needs an initialized SMC2 state");
  }
  const Model& model = *state.model;
  const int n = state.n_theta();
  PredictiveBand band;
  band.draws = Eigen::VectorXd::Zero(n);
  band.weights = state.weights.w;
  Eigen::VectorXd next(model.dim_x());
  for (int k = 0; k < n; ++k) {
    const auto& particle = state.particles[static_cast<std::size_t>(k)];
    if (particle.collapsed || band.weights[k] <= 0) {
      band.weights[k] = 0;
      continue;
    }
    const auto& f = particle.filter;
    try {
      if (f.weighted) {
        const int pick = resample_multinomial(f.weights.w, 1, rng)[0];
        model.sample_transition(f.particles.col(pick), particle.theta, rng, next);
      } else {
        next = f.particles.col(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(f.size()))));
      }
      band.draws[k] = model.sample_measurement(next, particle.theta, rng);
    } catch (const IntegratorDivergence&) {
      band.weights[k] = 0;
    }
  }
  if (!(band.weights.sum() > 0)) {
    throw ParticleCollapse(state.t + 1, "predictive sample");
  }
  band.weights /= band.weights.sum();
  band.levels = std::move(levels);
  band.quantiles.resize(static_cast<Eigen::Index>(band.levels.size()));
  for (std::size_t i = 0; i < band.levels.size(); ++i) {
    band.quantiles[static_cast<Eigen::Index>(i)] = weighted_quantile(band.draws, band.weights, band.levels[i]);
  }
  return band;
}

Eigen::MatrixXd smc2_posterior_quantiles(const Smc2State& state, std::span<const double> levels) {
  const Eigen::MatrixXd theta = state.theta_matrix();
  Eigen::MatrixXd out(theta.rows(), static_cast<Eigen::Index>(levels.size()));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    for (std::size_t j = 0; j < levels.size(); ++j) {
      out(i, static_cast<Eigen::Index>(j)) = weighted_quantile(theta.row(i).transpose(), state.weights.w, levels[j]);
    }
  }
  return out;
}

double bayes_factor(double log_evidence_m, double log_evidence_other) {
  return std::exp(log_evidence_m - log_evidence_other);
}

}  // namespace plugsmc
