#include "plugsmc/pmmh.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "plugsmc/errors.hpp"

namespace plugsmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

ProposalSpec::ProposalSpec(Kind kind, Eigen::VectorXd mean, Eigen::MatrixXd covariance, double scale)
    : kind_(kind), mean_(std::move(mean)), covariance_(std::move(covariance)), scale_(scale) {
  const auto d = covariance_.rows();
  if (covariance_.cols() != d || d == 0) {
    throw ContractViolation("proposal covariance must be square and nonempty");
  }
  if (!covariance_.allFinite() || !covariance_.isApprox(covariance_.transpose())) {
    throw ContractViolation("proposal covariance must be finite and symmetric");
  }
  if (kind_ == Kind::random_walk && covariance_.isZero(0)) {
    factor_ = Eigen::MatrixXd::Zero(d, d);
    return;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw ContractViolation("proposal covariance is not positive definite");
  }
  factor_ = llt.matrixL();
  log_det_ = 2 * factor_.diagonal().array().log().sum();
}

ProposalSpec ProposalSpec::random_walk(Eigen::MatrixXd covariance, double scale) {
  const auto d = covariance.rows();
  return ProposalSpec(Kind::random_walk, Eigen::VectorXd::Zero(d), std::move(covariance), scale);
}

ProposalSpec ProposalSpec::independent(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  if (mean.size() != covariance.rows()) {
    throw ContractViolation("proposal mean and covariance sizes differ");
  }
  return ProposalSpec(Kind::independent, std::move(mean), std::move(covariance), 1.0);
}

ProposalSpec ProposalSpec::default_random_walk(const Prior& prior, Rng& rng) {
  const Eigen::VectorXd sd = prior_sd(prior, rng);
  const double scale = 2.38 / std::sqrt(static_cast<double>(prior.dim()));
  return random_walk(sd.array().square().matrix().asDiagonal(), scale);
}

Theta ProposalSpec::draw(const Theta& current, Rng& rng) const {
  Eigen::VectorXd z(factor_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  if (kind_ == Kind::random_walk) {
    return current + scale_ * (factor_ * z);
  }
  return mean_ + factor_ * z;
}

double ProposalSpec::log_density(const Theta& to, const Theta& from) const {
  const Eigen::VectorXd centre = kind_ == Kind::random_walk ? from : mean_;
  const double s = kind_ == Kind::random_walk ? scale_ : 1.0;
  const auto d = static_cast<double>(to.size());
  if (factor_.isZero(0)) {
    return to == from ? 0.0 : kNegInf;
  }
  const Eigen::VectorXd r = factor_.triangularView<Eigen::Lower>().solve((to - centre) / s);
  return -0.5 * (d * std::log(2 * std::numbers::pi) + log_det_ + r.squaredNorm()) - d * std::log(s);
}

double mh_log_accept(double log_z_prop, double log_prior_prop, double log_q_reverse, double log_z, double log_prior,
                     double log_q_forward) {
  if (!std::isfinite(log_z) || !std::isfinite(log_prior)) {
    throw ContractViolation("current MH state must have finite likelihood and prior");
  }
  if (log_prior_prop == kNegInf || log_z_prop == kNegInf || log_q_reverse == kNegInf) {
    return kNegInf;
  }
  const double log_ratio = (log_z_prop + log_prior_prop + log_q_reverse) - (log_z + log_prior + log_q_forward);
  return std::min(0.0, log_ratio);
}

Eigen::VectorXd PmmhResult::trace(int coordinate, int burn_in) const {
  const int n = static_cast<int>(chain.size()) - burn_in;
  Eigen::VectorXd out(std::max(n, 0));
  for (int i = 0; i < out.size(); ++i) {
    out[i] = chain[static_cast<std::size_t>(burn_in + i)].theta[coordinate];
  }
  return out;
}

PmmhResult pmmh_run(const Model& model, std::span<const double> y, const ProposalSpec& proposal, const Theta& init,
                    const PmmhOptions& options) {
  if (options.n_particles < 1 || options.n_iters < 1) {
    throw ContractViolation("PMMH needs at least one particle and one iteration");
  }
  const double init_log_prior = model.prior().log_density(init);
  if (!std::isfinite(init_log_prior)) {
    throw ContractViolation("PMMH initial parameter lies outside the prior support");
  }

  PmmhResult result;
  result.chain.reserve(static_cast<std::size_t>(options.n_iters));

  // Runs a filter at theta; a collapse or divergence leaves log_z at -inf.
  auto run_filter = [&](const Theta& theta, Rng& rng, PmmhChainState& out) -> bool {
    try {
      FilterState state = run_particle_filter(model, theta, y, options.n_particles, options.scheme, rng,
                                              options.keep_paths);
      result.counters += state.counters;
      out.log_z = state.cum_loglik;
      if (options.keep_paths) {
        out.path = pf_sample_path(state, rng);
      }
      return true;
    } catch (const ParticleCollapse&) {
    } catch (const IntegratorDivergence&) {
    }
    ++result.collapsed_proposals;
    out.log_z = kNegInf;
    return false;
  };

  PmmhChainState current;
  current.theta = init;
  current.log_prior = init_log_prior;
  {
    Rng rng = Rng::stream(options.seed, StreamPurpose::pmmh, 0);
    if (!run_filter(init, rng, current)) {
      throw ParticleCollapse(0, "PMMH initial filter");
    }
  }
  result.chain.push_back(current);

  long accepted = 0;
  for (int i = 1; i < options.n_iters; ++i) {
    Rng rng = Rng::stream(options.seed, StreamPurpose::pmmh, static_cast<std::uint64_t>(i));
    PmmhChainState prop;
    prop.theta = proposal.draw(current.theta, rng);
    prop.log_prior = model.prior().log_density(prop.theta);
    double log_alpha = kNegInf;
    if (std::isfinite(prop.log_prior) && run_filter(prop.theta, rng, prop)) {
      const double q_rev = proposal.symmetric() ? 0.0 : proposal.log_density(current.theta, prop.theta);
      const double q_fwd = proposal.symmetric() ? 0.0 : proposal.log_density(prop.theta, current.theta);
      log_alpha = mh_log_accept(prop.log_z, prop.log_prior, q_rev, current.log_z, current.log_prior, q_fwd);
    }
    if (std::log(rng.uniform()) < log_alpha) {
      prop.accepted = true;
      current = std::move(prop);
      ++accepted;
    } else {
      current.accepted = false;
    }
    result.chain.push_back(current);
  }
  result.acceptance_rate =
      options.n_iters > 1 ? static_cast<double>(accepted) / static_cast<double>(options.n_iters - 1) : 0.0;
  return result;
}

double batch_means_standard_error(const Eigen::Ref<const Eigen::VectorXd>& trace, int n_batches) {
  const Eigen::Index batch = trace.size() / n_batches;
  if (batch < 1) {
    throw ContractViolation("trace too short for batch means");
  }
  Eigen::VectorXd means(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    means[b] = trace.segment(b * batch, batch).mean();
  }
  const double mu = means.mean();
  const double var = (means.array() - mu).square().sum() / (n_batches - 1);
  return std::sqrt(var / n_batches);
}

}  // namespace plugsmc
