#ifndef PLUGSMC_PLANKTON_HPP
#define PLUGSMC_PLANKTON_HPP

#include <memory>
#include <string_view>

#include "plugsmc/model.hpp"

namespace plugsmc {

/// Phytoplankton-zooplankton (Lotka-Volterra with quadratic predator
/// mortality) model.
///
/// State x = (alpha, log p, log z). Each day a fresh growth rate alpha is drawn
/// from N(mu_alpha, sigma_alpha^2) and (p, z) follow
///   dp/dt = alpha p - c p z,   dz/dt = e c p z - m_l z - m_q z^2
/// for one time unit. Only phytoplankton is observed: log y ~ N(log p, sigma_y^2).
///
/// Free parameters (unit-box uniform prior):
///   full:   (mu_alpha, sigma_alpha, sigma_y, m_l, m_q)
///   no_quadratic_mortality: (mu_alpha, sigma_alpha, sigma_y, m_l), m_q = 0.
enum class PZVariant { full, no_quadratic_mortality };

struct LvCoefficients {
  double clearance = 0.25;   ///< c
  double efficiency = 0.3;   ///< e
};

struct PZInitial {
  double mu_logp = 0.69314718055994530942;  ///< log 2
  double mu_logz = 0.69314718055994530942;
  double sd_logp = 0.2;
  double sd_logz = 0.1;
};

struct LogPZ {
  double logp;
  double logz;
};

/// Classic fixed-step RK4 on the log-transformed system
///   d(log p)/dt = alpha - c z,   d(log z)/dt = e c p - m_l - m_q z.
/// `duration` must be an integer multiple of `step`. Throws
/// IntegratorDivergence if the result is not finite.
LogPZ rk4_lv_step(LogPZ state, double alpha, double m_l, double m_q, double duration, double step,
                  LvCoefficients coefficients = {});

/// Batched form: advances every (logp[k], logz[k]) with its own alpha[k] in
/// place. Throws IntegratorDivergence if any state is not finite.
void rk4_lv_step(Eigen::ArrayXd& logp, Eigen::ArrayXd& logz, const Eigen::ArrayXd& alpha, double m_l, double m_q,
                 double duration, double step, LvCoefficients coefficients = {});

class PZModel final : public Model {
 public:
  explicit PZModel(PZVariant variant, double rk4_step = 0.01, LvCoefficients coefficients = {},
                   PZInitial initial = {});

  /// Data-generating parameters of the reference experiment.
  static Theta reference_theta(PZVariant variant);

  PZVariant variant() const { return variant_; }
  double rk4_step() const { return step_; }

  std::string name() const override { return variant_ == PZVariant::full ? "pz" : "pzstar"; }
  int dim_x() const override { return 3; }
  int dim_theta() const override { return variant_ == PZVariant::full ? 5 : 4; }
  std::vector<std::string> parameter_names() const override;
  std::vector<std::string> state_names() const override { return {"alpha", "log_p", "log_z"}; }
  const Prior& prior() const override { return *prior_; }

  void sample_initial(const Theta& theta, Rng& rng, StateRef out) const override;
  void sample_transition(ConstStateRef x, const Theta& theta, Rng& rng, StateRef out) const override;
  double measurement_logdensity(double y, ConstStateRef x, const Theta& theta) const override;
  double sample_measurement(ConstStateRef x, const Theta& theta, Rng& rng) const override;
  void sample_transitions(const Eigen::MatrixXd& x, std::span<const int> parents, const Theta& theta, Rng& rng,
                          Eigen::MatrixXd& out) const override;
  void measurement_logdensities(double y, const Eigen::MatrixXd& x, const Theta& theta,
                                Eigen::Ref<Eigen::VectorXd> out) const override;

 private:
  double quadratic_mortality(const Theta& theta) const {
    return variant_ == PZVariant::full ? theta[4] : 0.0;
  }

  PZVariant variant_;
  double step_;
  LvCoefficients coef_;
  PZInitial init_;
  std::shared_ptr<const Prior> prior_;
};

PZVariant parse_pz_variant(std::string_view name);

}  // namespace plugsmc

#endif  // PLUGSMC_PLANKTON_HPP
