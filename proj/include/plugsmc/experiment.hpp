#ifndef PLUGSMC_EXPERIMENT_HPP
#define PLUGSMC_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "plugsmc/linear_gaussian.hpp"
#include "plugsmc/model.hpp"
#include "plugsmc/resampling.hpp"
#include "plugsmc/smc2.hpp"

namespace plugsmc {

enum class Command { simulate, pf, abc, pmmh, smc, smc2, compare };
enum class Profile { paper, desk };

Command parse_command(std::string_view name);
std::string_view to_string(Command command);

/// Everything an experiment needs. Defaults are the paper profile.
struct RunConfig {
  Command command = Command::smc2;
  std::string model = "pz";
  std::string alternative = "pzstar";  ///< second model of `compare`
  std::string data_model;              ///< model that generates the data; empty means `model`
  Profile profile = Profile::paper;
  int horizon = 365;                   ///< T: observations y_0..y_T
  int n_theta = 1024;
  int n_x = 1024;
  double ess_threshold = 0.5;
  int n_moves = 5;
  double rk4_step = 0.01;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> data_seed;  ///< defaults to seed
  std::string data;                        ///< observation CSV (column y); simulated when empty
  int replicates = 1;
  std::string output = "out";
  ResamplingScheme scheme = ResamplingScheme::systematic;
  double epsilon = 1.0;
  int n_accept = 100;
  long max_attempts = 100000;
  int n_iters = 1000;
  double proposal_sd = 0;  ///< PMMH random-walk sd; 0 selects the prior-based default
  int workers = 1;
  bool svg = true;
  LGParams lg;
  std::vector<LGField> lg_free{LGField::a};

  const std::string& generating_model() const { return data_model.empty() ? model : data_model; }
  std::uint64_t effective_data_seed() const { return data_seed.value_or(seed); }
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Recognized configuration keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses flat `key = value` text; `#` starts a comment. Throws UsageError on
/// malformed lines.
ConfigEntries parse_key_values(std::string_view text);

/// Builds a RunConfig from file entries overridden by flag entries. The
/// profile is resolved first so explicit keys override its defaults. Throws
/// UsageError naming the key on unknown keys, bad values, invalid ranges or a
/// missing seed.
RunConfig parse_config(const ConfigEntries& file, const ConfigEntries& flags);
RunConfig parse_config(std::string_view file_text, const ConfigEntries& flags);

/// Every resolved setting as a typed JSON value, for the run manifest.
nlohmann::json describe(const RunConfig& config);

/// Model by name ("lg", "pz", "pzstar"); the LG model frees config.lg_free
/// under a uniform prior on [0, 1] per field.
std::unique_ptr<Model> make_model(const RunConfig& config, std::string_view name);

/// Data-generating parameter of a model built by make_model.
Theta truth_theta(const RunConfig& config, const Model& model);

struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd states;  ///< empty when the data were loaded from a file
};

/// Reads config.data, or simulates the generating model at its truth with
/// the data seed.
Dataset load_or_simulate(const RunConfig& config);

/// Per-time record of an SMC2 run with predictive bands and posterior
/// quantiles.
struct Smc2Run {
  std::vector<Smc2Step> trace;
  Eigen::MatrixXd band;       ///< (T+1) x 2: 10% and 90% predictive quantiles of y_t given y_{0:t-1}
  std::vector<Eigen::MatrixXd> quantiles;  ///< per t: dim_theta x levels
  Eigen::MatrixXd final_theta;
  Eigen::VectorXd final_weights;
};

inline constexpr double kQuantileLevels[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

Smc2Run run_smc2(const Model& model, std::span<const double> y, const Smc2Config& config, bool record_band = true,
                 bool record_quantiles = true);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

struct Smc2Diagnostics {
  int rejuvenations_first_half = 0;   ///< rejuvenations at t <= T/2
  int rejuvenations_second_half = 0;
  double final_acceptance_rate = 0;   ///< mean acceptance of the last rejuvenation
  int outside_count = 0;              ///< y_t outside the band, t = 1..T
  double outside_fraction = 0;
  double transitions_per_theta = 0;   ///< cumulative f-draws per theta-particle at T
  double cost_r2 = 0;                 ///< linear fit of the cumulative f-draws against t
  double log_evidence = 0;
};

Smc2Diagnostics diagnose(const Smc2Run& run, std::span<const double> y);

/// Replicate r of an experiment uses seed_for_replicate(seed, r); replicate 0
/// keeps the master seed.
std::uint64_t seed_for_replicate(std::uint64_t seed, int replicate);

struct ExperimentResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
  double seconds = 0;
};

/// Runs the configured command and writes CSV tables, optional SVG views and
/// manifest.json under config.output.
ExperimentResult run_experiment(const RunConfig& config);

}  // namespace plugsmc

#endif  // PLUGSMC_EXPERIMENT_HPP
