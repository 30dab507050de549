#include "toy_models.hpp"

#include <cmath>

#include "plugsmc/errors.hpp"

namespace plugsmc::testing {

DiscretePrior::DiscretePrior(std::vector<Theta> points) : points_(std::move(points)) {
  if (points_.empty()) throw ContractViolation("discrete prior needs support points");
}

Theta DiscretePrior::sample(Rng& rng) const { return points_[rng.below(points_.size())]; }

double DiscretePrior::log_density(const Theta& theta) const {
  for (const auto& p : points_) {
    if (p == theta) return -std::log(static_cast<double>(points_.size()));
  }
  return -std::numeric_limits<double>::infinity();
}

BernoulliHmm::BernoulliHmm(std::shared_ptr<const DiscretePrior> prior) : prior_(std::move(prior)) {}

void BernoulliHmm::sample_initial(const Theta&, Rng& rng, StateRef out) const {
  out[0] = rng.uniform() < 0.5 ? 1.0 : 0.0;
}

void BernoulliHmm::sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const {
  out[0] = rng.uniform() < theta[0] ? x[0] : 1.0 - x[0];
}

double BernoulliHmm::measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const {
  return std::log(y == x[0] ? theta[1] : 1.0 - theta[1]);
}

double BernoulliHmm::sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const {
  return rng.uniform() < theta[1] ? x[0] : 1.0 - x[0];
}

std::shared_ptr<const DiscretePrior> bernoulli_grid() {
  std::vector<Theta> points;
  for (double stay : {0.2, 0.5, 0.85}) {
    for (double accuracy : {0.6, 0.9}) points.push_back(Eigen::Vector2d(stay, accuracy));
  }
  return std::make_shared<DiscretePrior>(std::move(points));
}

std::vector<double> enumerate_posterior(const BernoulliHmm&, const DiscretePrior& prior,
                                        const std::vector<double>& y) {
  const auto n = y.size();
  std::vector<double> mass;
  for (const auto& theta : prior.points()) {
    double lik = 0;
    for (unsigned path = 0; path < (1u << n); ++path) {
      double p = 0.5;
      for (std::size_t t = 0; t < n; ++t) {
        const int x = static_cast<int>((path >> t) & 1u);
        if (t > 0) {
          const int prev = static_cast<int>((path >> (t - 1)) & 1u);
          p *= x == prev ? theta[0] : 1 - theta[0];
        }
        p *= static_cast<double>(x) == y[t] ? theta[1] : 1 - theta[1];
      }
      lik += p;
    }
    mass.push_back(lik);
  }
  double total = 0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return mass;
}

namespace {

class ZeroLikelihood final : public IncrementalLikelihood {
 public:
  double next(double) override { return 0.0; }
  std::unique_ptr<IncrementalLikelihood> clone() const override { return std::make_unique<ZeroLikelihood>(); }
};

}  // namespace

FlatMeasurementModel::FlatMeasurementModel() : prior_(UniformPrior::unit_box(1)) {}

void FlatMeasurementModel::sample_initial(const Theta&, Rng& rng, StateRef out) const { out[0] = rng.normal(); }

void FlatMeasurementModel::sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const {
  out[0] = x[0] + theta[0] * rng.normal();
}

double FlatMeasurementModel::sample_measurement(ConstStateRef x, const Theta&, Rng&) const { return x[0]; }

std::unique_ptr<IncrementalLikelihood> FlatMeasurementModel::incremental_likelihood(const Theta&) const {
  return std::make_unique<ZeroLikelihood>();
}

std::unique_ptr<LinearGaussianModel> lg_free_a(LGParams base, double lower, double upper) {
  auto prior = std::make_shared<UniformPrior>(Eigen::VectorXd::Constant(1, lower), Eigen::VectorXd::Constant(1, upper));
  return std::make_unique<LinearGaussianModel>(base, std::vector<LGField>{LGField::a}, std::move(prior));
}

std::unique_ptr<LinearGaussianModel> lg_pinned(LGParams base) {
  return lg_free_a(base, base.a, base.a);
}

std::vector<double> lg_data(const LGParams& params, int horizon, std::uint64_t seed) {
  const auto model = lg_pinned(params);
  Rng rng = Rng::stream(seed, StreamPurpose::test, 7);
  const Trajectory tr = simulate(*model, Eigen::VectorXd::Constant(1, params.a), horizon, rng);
  return {tr.observations.data(), tr.observations.data() + tr.observations.size()};
}

}  // namespace plugsmc::testing
