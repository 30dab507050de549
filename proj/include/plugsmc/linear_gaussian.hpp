#ifndef PLUGSMC_LINEAR_GAUSSIAN_HPP
#define PLUGSMC_LINEAR_GAUSSIAN_HPP

#include <memory>
#include <string_view>
#include <vector>

#include "plugsmc/model.hpp"

namespace plugsmc {

/// Scalar linear-Gaussian state-space model
///   x_0 ~ N(mu0, var0),  x_t = a x_{t-1} + N(0, var_x),  y_t = b x_t + N(0, var_y).
/// Zero variances are accepted as point-mass limits.
struct LGParams {
  double mu0 = 0;
  double var0 = 1;
  double a = 0.9;
  double var_x = 1;
  double b = 1;
  double var_y = 1;
};

void validate(const LGParams& p);

enum class LGField { mu0, var0, a, var_x, b, var_y };

LGField parse_lg_field(std::string_view name);
std::string_view to_string(LGField field);

/// Linear-Gaussian model whose free parameters overwrite selected fields of
/// a base parameter set.
class LinearGaussianModel final : public Model {
 public:
  LinearGaussianModel(LGParams base, std::vector<LGField> free, std::shared_ptr<const Prior> prior);

  LGParams params_at(const Theta& theta) const;
  const LGParams& base() const { return base_; }
  const std::vector<LGField>& free_fields() const { return free_; }

  std::string name() const override { return "lg"; }
  int dim_x() const override { return 1; }
  int dim_theta() const override { return static_cast<int>(free_.size()); }
  std::vector<std::string> parameter_names() const override;
  std::vector<std::string> state_names() const override { return {"x"}; }
  const Prior& prior() const override { return *prior_; }

  void sample_initial(const Theta& theta, Rng& rng, StateRef out) const override;
  void sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const override;
  double measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const override;
  double sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const override;
  void sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents, const Theta& theta, Rng& rng,
                          Eigen::MatrixXd& out) const override;
  void measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                Eigen::Ref<Eigen::VectorXd> out) const override;
  std::unique_ptr<IncrementalLikelihood> incremental_likelihood(const Theta& theta) const override;

 private:
  LGParams base_;
  std::vector<LGField> free_;
  std::shared_ptr<const Prior> prior_;
};

/// Gaussian log-density; a zero variance is treated as a unit point mass
/// (0 at the mean, -inf elsewhere).
double normal_logpdf(double x, double mean, double var);

}  // namespace plugsmc

#endif  // PLUGSMC_LINEAR_GAUSSIAN_HPP
