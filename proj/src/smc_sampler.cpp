#include "plugsmc/smc_sampler.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "plugsmc/errors.hpp"
#include "plugsmc/parallel.hpp"
#include "plugsmc/weighted_stats.hpp"

namespace plugsmc {

ProposalSpec fit_gaussian_proposal(const Eigen::Ref<const Eigen::MatrixXd>& theta,
                                   const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (theta.cols() != w.size()) {
    throw ContractViolation("one weight per particle required");
  }
  if ((w.array() > 0).count() < 2) {
    throw ContractViolation("need at least two particles with positive weight to fit a proposal");
  }
  Eigen::VectorXd mean = weighted_mean(theta, w);
  Eigen::MatrixXd cov = weighted_covariance(theta, w);
  Eigen::Index first = 0;
  while (!(w[first] > 0)) ++first;
  bool degenerate = true;
  for (Eigen::Index k = first + 1; k < theta.cols() && degenerate; ++k) {
    degenerate = !(w[k] > 0) || theta.col(k) == theta.col(first);
  }
  if (degenerate) {
    mean = theta.col(first);
    cov.setZero();
  }
  const double d = static_cast<double>(theta.rows());
  const double trace = cov.trace();
  const double jitter = trace > 0 ? 1e-6 * trace / d : 1e-6;
  cov.diagonal().array() += jitter;
  try {
    return ProposalSpec::independent(mean, cov);
  } catch (const ContractViolation&) {
    throw ContractViolation("fitted proposal covariance is singular after jitter");
  }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Slot {
  std::unique_ptr<IncrementalLikelihood> lik;
  double log_lik = 0;
  double log_prior = 0;
};

}  // namespace

double tractable_mh_moves(const Model& model, std::span<const double> past, const ProposalSpec& q, int n_moves,
                          std::uint64_t seed, Eigen::MatrixXd& theta, Eigen::VectorXd& log_lik,
                          Eigen::VectorXd& log_prior, int workers) {
  const auto n = static_cast<int>(theta.cols());
  if (log_lik.size() != n || log_prior.size() != n) {
    throw ContractViolation("MH moves need one log-likelihood and one log-prior per particle");
  }
  const Prior& prior = model.prior();
  std::vector<int> accepted(static_cast<std::size_t>(n), 0);
  parallel_for(n, workers, [&](int k) {
    Rng rng = Rng::stream(seed, StreamPurpose::move, static_cast<std::uint64_t>(k));
    for (int m = 0; m < n_moves; ++m) {
      const Theta current = theta.col(k);
      const Theta prop = q.draw(current, rng);
      const double lp = prior.log_density(prop);
      double log_alpha = kNegInf;
      double ll = 0;
      if (std::isfinite(lp)) {
        auto lik = model.incremental_likelihood(prop);
        if (!lik) {
          throw Unsupported("MH moves need a model with a tractable likelihood");
        }
        for (double ys : past) ll += lik->next(ys);
        log_alpha = mh_log_accept(ll, lp, q.log_density(current, prop), log_lik[k], log_prior[k],
                                  q.log_density(prop, current));
      }
      if (std::log(rng.uniform()) < log_alpha) {
        theta.col(k) = prop;
        log_lik[k] = ll;
        log_prior[k] = lp;
        ++accepted[static_cast<std::size_t>(k)];
      }
    }
  });
  long total = 0;
  for (int c : accepted) total += c;
  return n_moves > 0 && n > 0 ? static_cast<double>(total) / (static_cast<double>(n) * n_moves) : 0.0;
}

ThetaCloudTractable smc_sampler_run(const Model& model, std::span<const double> y, const SamplerConfig& config,
                                    const SamplerObserver& observer) {
  if (config.n_theta < 1) {
    throw ContractViolation("sampler needs at least one particle");
  }
  if (!(config.ess_threshold > 0 && config.ess_threshold < 1)) {
    throw ContractViolation("ESS threshold must lie in (0, 1)");
  }
  const int n = config.n_theta;
  const Prior& prior = model.prior();

  ThetaCloudTractable cloud;
  cloud.theta.resize(prior.dim(), n);
  std::vector<Slot> slots(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Rng rng = Rng::stream(config.seed, StreamPurpose::theta_init, static_cast<std::uint64_t>(k));
    cloud.theta.col(k) = prior.sample(rng);
    auto& slot = slots[static_cast<std::size_t>(k)];
    slot.lik = model.incremental_likelihood(cloud.theta.col(k));
    if (!slot.lik) {
      throw Unsupported("SMC sampler needs a model with a tractable likelihood");
    }
    slot.log_prior = prior.log_density(cloud.theta.col(k));
  }
  cloud.weights = WeightVector::uniform(n);

  for (int t = 0; t < static_cast<int>(y.size()); ++t) {
    SamplerStep step;
    step.t = t;
    step.ess_before = ess(cloud.weights.w);
    step.ess_after_reset = step.ess_before;
    if (t > 0 && step.ess_before < config.ess_threshold) {
      Rng rs = Rng::stream(config.seed, StreamPurpose::theta_resample, static_cast<std::uint64_t>(t));
      const AncestorVector a = resample_systematic(cloud.weights.w, n, rs);
      const Eigen::MatrixXd fit_theta = cloud.theta;
      const Eigen::VectorXd fit_w = cloud.weights.w;
      Eigen::MatrixXd theta(cloud.theta.rows(), n);
      std::vector<Slot> next(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        const auto ak = static_cast<std::size_t>(a[static_cast<std::size_t>(k)]);
        theta.col(k) = cloud.theta.col(static_cast<Eigen::Index>(ak));
        next[static_cast<std::size_t>(k)] = {slots[ak].lik->clone(), slots[ak].log_lik, slots[ak].log_prior};
      }
      cloud.theta = std::move(theta);
      slots = std::move(next);
      cloud.weights = WeightVector::uniform(n);
      step.ess_after_reset = ess(cloud.weights.w);
      // With a single surviving particle the fit falls back to the resampled
      // (all identical) cloud, which yields a jitter-only proposal.
      const ProposalSpec q = (fit_w.array() > 0).count() >= 2
                                 ? fit_gaussian_proposal(fit_theta, fit_w)
                                 : fit_gaussian_proposal(cloud.theta, cloud.weights.w);

      const auto past = y.first(static_cast<std::size_t>(t));
      Eigen::VectorXd log_lik(n), log_prior(n);
      for (int k = 0; k < n; ++k) {
        log_lik[k] = slots[static_cast<std::size_t>(k)].log_lik;
        log_prior[k] = slots[static_cast<std::size_t>(k)].log_prior;
      }
      const Eigen::MatrixXd before = cloud.theta;
      step.acceptance_rate =
          tractable_mh_moves(model, past, q, config.n_moves, Rng::stream(config.seed, StreamPurpose::move, t).bits(),
                             cloud.theta, log_lik, log_prior, config.workers);
      parallel_for(n, config.workers, [&](int k) {
        auto& slot = slots[static_cast<std::size_t>(k)];
        slot.log_lik = log_lik[k];
        slot.log_prior = log_prior[k];
        if (cloud.theta.col(k) != before.col(k)) {
          slot.lik = model.incremental_likelihood(cloud.theta.col(k));
          for (double ys : past) slot.lik->next(ys);
        }
      });
      step.rejuvenated = true;
    }

    Eigen::VectorXd inc(n);
    const double yt = y[static_cast<std::size_t>(t)];
    parallel_for(n, config.workers, [&](int k) {
      auto& slot = slots[static_cast<std::size_t>(k)];
      inc[k] = slot.lik->next(yt);
      slot.log_lik += inc[k];
    });
    // log sum_k omega_{t-1}^k p(y_t | y_{0:t-1}, theta^k), omega normalized
    const Eigen::VectorXd log_prev = cloud.weights.w.array().log();
    const Eigen::VectorXd log_w = log_prev + inc;
    cloud.weights = normalize(log_w, t);
    step.log_evidence_increment = log_sum_exp(log_w);
    cloud.log_evidence += step.log_evidence_increment;
    step.log_evidence = cloud.log_evidence;
    step.ess = ess(cloud.weights.w);
    cloud.trace.push_back(step);
    if (observer) observer(t, cloud);
  }

  cloud.log_likelihood.resize(n);
  for (int k = 0; k < n; ++k) cloud.log_likelihood[k] = slots[static_cast<std::size_t>(k)].log_lik;
  return cloud;
}

}  // namespace plugsmc
