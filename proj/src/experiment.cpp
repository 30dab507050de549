#include "plugsmc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "plugsmc/abc.hpp"
#include "plugsmc/csv.hpp"
#include "plugsmc/errors.hpp"
#include "plugsmc/kalman.hpp"
#include "plugsmc/particle_filter.hpp"
#include "plugsmc/plankton.hpp"
#include "plugsmc/pmmh.hpp"
#include "plugsmc/smc_sampler.hpp"
#include "plugsmc/svg.hpp"
#include "plugsmc/weighted_stats.hpp"

namespace plugsmc {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> iota_vector(std::size_t n, double start = 0) {
  std::vector<double> out(n);
  std::iota(out.begin(), out.end(), start);
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

/// Collects written files relative to the output root.
class Outputs {
 public:
  Outputs(fs::path root, bool svg) : root_(std::move(root)), svg_(svg) { ensure_directory(root_); }

  fs::path csv(const fs::path& name) { return track(name); }

  void plot(const fs::path& name, const svg::Plot& plot) {
    if (svg_) svg::write(plot, track(name).string());
  }

  const fs::path& root() const { return root_; }
  std::vector<fs::path> files() const { return files_; }

 private:
  fs::path track(const fs::path& name) {
    const fs::path full = root_ / name;
    ensure_directory(full.parent_path());
    files_.push_back(name);
    return full;
  }

  fs::path root_;
  bool svg_;
  std::vector<fs::path> files_;
};

void write_observations(Outputs& out, const Eigen::VectorXd& y) {
  CsvWriter csv(out.csv("observations.csv"), {"t", "y"});
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    csv.cell(static_cast<long long>(t)).cell(y[t]).end_row();
  }
}

bool positive_data(const Model& model) { return model.name() != "lg"; }

void write_quantiles(CsvWriter& csv, int t, const std::vector<std::string>& names, const Eigen::MatrixXd& q) {
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      csv.cell(t).cell(names[static_cast<std::size_t>(i)]).cell(kQuantileLevels[j]).cell(q(i, j)).end_row();
    }
  }
}

void plot_quantiles(Outputs& out, const fs::path& prefix, const std::vector<std::string>& names,
                    const std::vector<Eigen::MatrixXd>& quantiles, const Theta* truth) {
  const auto x = iota_vector(quantiles.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    svg::Plot p;
    p.title = "Posterior of " + names[i];
    p.x_label = "t";
    p.y_label = names[i];
    for (int lo = 0, hi = 8; lo < hi; ++lo, --hi) {
      svg::Ribbon r;
      r.x = x;
      for (const auto& q : quantiles) {
        r.lower.push_back(q(static_cast<Eigen::Index>(i), lo));
        r.upper.push_back(q(static_cast<Eigen::Index>(i), hi));
      }
      r.color = "#555555";
      r.opacity = 0.18;
      p.ribbons.push_back(std::move(r));
    }
    svg::Line median{x, {}, "#111111", "median"};
    for (const auto& q : quantiles) median.y.push_back(q(static_cast<Eigen::Index>(i), 4));
    p.lines.push_back(std::move(median));
    if (truth != nullptr && static_cast<Eigen::Index>(i) < truth->size()) {
      p.horizontal_rules.push_back((*truth)[static_cast<Eigen::Index>(i)]);
    }
    out.plot(prefix.string() + names[i] + ".svg", p);
  }
}

nlohmann::json to_json(const Eigen::VectorXd& v) { return to_vector(v); }

nlohmann::json run_simulate(const RunConfig& config, Outputs& out) {
  if (!config.data.empty()) {
    throw UsageError("data", "simulate generates its own data; drop the data key");
  }
  const auto model = make_model(config, config.generating_model());
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  const auto names = model->state_names();
  std::vector<std::string> header{"t"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter csv(out.csv("states.csv"), header);
  for (Eigen::Index t = 0; t < ds.states.cols(); ++t) {
    csv.cell(static_cast<long long>(t));
    for (Eigen::Index i = 0; i < ds.states.rows(); ++i) csv.cell(ds.states(i, t));
    csv.end_row();
  }
  svg::Plot p;
  p.title = "Simulated observations (" + model->name() + ")";
  p.x_label = "t";
  p.y_label = "y";
  p.log_y = positive_data(*model);
  p.lines.push_back({iota_vector(static_cast<std::size_t>(ds.y.size())), to_vector(ds.y), "#1f77b4", "", 1.0, true});
  out.plot("observations.svg", p);
  return {{"observations", ds.y.size()},
          {"theta", to_json(truth_theta(config, *model))},
          {"y_min", ds.y.minCoeff()},
          {"y_max", ds.y.maxCoeff()}};
}

nlohmann::json run_pf(const RunConfig& config, Outputs& out) {
  const auto model = make_model(config, config.model);
  const Theta theta = truth_theta(config, *model);
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  const auto* lg = dynamic_cast<const LinearGaussianModel*>(model.get());
  std::optional<KalmanResult> kalman;
  if (lg != nullptr) {
    kalman = kalman_filter(lg->params_at(theta), std::span<const double>(ds.y.data(), ds.y.size()));
  }

  const auto names = model->state_names();
  std::vector<std::string> header{"t", "y"};
  for (const auto& n : names) header.push_back("mean_" + n);
  for (const char* h : {"loglik_increment", "cum_loglik", "ess", "unique_ancestors", "transitions", "measurements"}) {
    header.emplace_back(h);
  }
  if (kalman) {
    for (const char* h : {"kalman_mean", "kalman_var", "kalman_loglik_increment"}) header.emplace_back(h);
  }
  CsvWriter csv(out.csv("filter.csv"), header);

  Rng init_rng = Rng::stream(config.seed, StreamPurpose::filter_init);
  FilterState state = pf_init(*model, theta, config.n_x, init_rng, true);
  std::vector<double> unique, observed_mean;
  for (Eigen::Index t = 0; t < ds.y.size(); ++t) {
    Rng rng = Rng::stream(config.seed, StreamPurpose::filter_step, 0, static_cast<std::uint64_t>(t));
    pf_step(state, ds.y[t], config.scheme, rng);
    csv.cell(static_cast<long long>(t)).cell(ds.y[t]);
    for (int i = 0; i < model->dim_x(); ++i) {
      csv.cell(pf_estimate(state, [i](const auto& x) { return x[i]; }));
    }
    unique.push_back(pf_unique_initial_ancestors(state));
    csv.cell(state.weights.log_mean)
        .cell(state.cum_loglik)
        .cell(ess(state.weights.w))
        .cell(static_cast<long long>(unique.back()))
        .cell(static_cast<long long>(state.counters.transitions))
        .cell(static_cast<long long>(state.counters.measurements));
    if (kalman) {
      csv.cell(kalman->filter_means[t]).cell(kalman->filter_vars[t]).cell(kalman->incremental_logliks[t]);
    }
    csv.end_row();
    observed_mean.push_back(lg != nullptr ? pf_estimate(state, [](const auto& x) { return x[0]; })
                                          : std::exp(pf_estimate(state, [](const auto& x) { return x[1]; })));
  }

  const auto x = iota_vector(static_cast<std::size_t>(ds.y.size()));
  svg::Plot p;
  p.title = "Particle filter at the data-generating parameter";
  p.x_label = "t";
  p.y_label = lg != nullptr ? "x" : "phytoplankton";
  p.log_y = positive_data(*model);
  p.lines.push_back({x, to_vector(ds.y), "#999999", "observations", 1.0, true});
  p.lines.push_back({x, observed_mean, "#1f77b4", "particle estimate"});
  if (kalman) p.lines.push_back({x, to_vector(kalman->filter_means), "#d62728", "Kalman", 1.0});
  out.plot("filter.svg", p);
  svg::Plot g;
  g.title = "Distinct time-0 ancestors";
  g.x_label = "t";
  g.y_label = "count";
  g.log_y = true;
  g.lines.push_back({x, unique, "#1f77b4", ""});
  out.plot("ancestors.svg", g);

  nlohmann::json summary{{"log_likelihood", state.cum_loglik},
                         {"theta", to_json(theta)},
                         {"unique_initial_ancestors", unique.back()},
                         {"transitions", state.counters.transitions}};
  if (kalman) summary["kalman_log_likelihood"] = kalman->total_loglik;
  return summary;
}

nlohmann::json run_abc(const RunConfig& config, Outputs& out) {
  const auto model = make_model(config, config.model);
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  AbcOptions options;
  options.epsilon = config.epsilon;
  options.n_accept = config.n_accept;
  options.max_attempts = config.max_attempts;
  options.seed = config.seed;
  options.keep_paths = false;
  const Distance distance = positive_data(*model) ? Distance(distance_euclidean_log) : Distance(distance_euclidean);
  const AbcResult result =
      abc_rejection(*model, std::span<const double>(ds.y.data(), ds.y.size()), distance, options);
  const auto names = model->parameter_names();
  std::vector<std::string> header{"index"};
  header.insert(header.end(), names.begin(), names.end());
  header.emplace_back("distance");
  CsvWriter csv(out.csv("abc.csv"), header);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model->dim_theta());
  for (std::size_t i = 0; i < result.accepted.size(); ++i) {
    const auto& s = result.accepted[i];
    csv.cell(static_cast<long long>(i));
    for (Eigen::Index j = 0; j < s.theta.size(); ++j) csv.cell(s.theta[j]);
    csv.cell(s.distance).end_row();
    mean += s.theta;
  }
  mean /= static_cast<double>(result.accepted.size());
  return {{"attempts", result.attempts},
          {"accepted", result.accepted.size()},
          {"acceptance_rate", result.acceptance_rate()},
          {"smallest_distance", result.smallest_distance},
          {"posterior_mean", to_json(mean)}};
}

Theta prior_centre(const Model& model, std::uint64_t seed) {
  if (const auto* u = dynamic_cast<const UniformPrior*>(&model.prior())) {
    return 0.5 * (u->lower() + u->upper());
  }
  Rng rng = Rng::stream(seed, StreamPurpose::pmmh, 0, 2);
  return model.prior().sample(rng);
}

std::optional<GridPosterior> lg_reference(const Model& model, const Eigen::VectorXd& y) {
  const auto* lg = dynamic_cast<const LinearGaussianModel*>(&model);
  if (lg == nullptr || lg->dim_theta() > 2) return std::nullopt;
  return lg_posterior_reference(*lg, std::span<const double>(y.data(), y.size()), lg->dim_theta() == 1 ? 2001 : 201);
}

nlohmann::json run_pmmh(const RunConfig& config, Outputs& out) {
  const auto model = make_model(config, config.model);
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  const int d = model->dim_theta();
  Rng tune = Rng::stream(config.seed, StreamPurpose::pmmh, 0, 1);
  const ProposalSpec proposal =
      config.proposal_sd > 0
          ? ProposalSpec::random_walk(Eigen::MatrixXd::Identity(d, d) * (config.proposal_sd * config.proposal_sd))
          : ProposalSpec::default_random_walk(model->prior(), tune);
  PmmhOptions options;
  options.n_particles = config.n_x;
  options.n_iters = config.n_iters;
  options.scheme = config.scheme;
  options.seed = config.seed;
  options.keep_paths = true;
  const PmmhResult result = pmmh_run(*model, std::span<const double>(ds.y.data(), ds.y.size()), proposal,
                                     prior_centre(*model, config.seed), options);

  const auto names = model->parameter_names();
  std::vector<std::string> header{"iteration"};
  header.insert(header.end(), names.begin(), names.end());
  header.emplace_back("log_z");
  header.emplace_back("accepted");
  CsvWriter csv(out.csv("chain.csv"), header);
  for (std::size_t i = 0; i < result.chain.size(); ++i) {
    const auto& s = result.chain[i];
    csv.cell(static_cast<long long>(i));
    for (Eigen::Index j = 0; j < s.theta.size(); ++j) csv.cell(s.theta[j]);
    csv.cell(s.log_z).cell(s.accepted ? 1 : 0).end_row();
  }
  const int burn_in = config.n_iters / 10;
  Eigen::VectorXd mean(d), se(d);
  svg::Plot p;
  p.title = "PMMH trace";
  p.x_label = "iteration";
  p.y_label = "theta";
  for (int j = 0; j < d; ++j) {
    const Eigen::VectorXd trace = result.trace(j, burn_in);
    mean[j] = trace.mean();
    se[j] = trace.size() >= 100 ? batch_means_standard_error(trace) : kNaN;
    p.lines.push_back({iota_vector(result.chain.size()), to_vector(result.trace(j)), kPalette[j % 7],
                       names[static_cast<std::size_t>(j)], 1.0});
  }
  out.plot("chain.svg", p);
  nlohmann::json summary{{"acceptance_rate", result.acceptance_rate},
                         {"collapsed_proposals", result.collapsed_proposals},
                         {"burn_in", burn_in},
                         {"posterior_mean", to_json(mean)},
                         {"batch_means_se", to_json(se)},
                         {"transitions", result.counters.transitions}};
  if (auto ref = lg_reference(*model, ds.y)) summary["grid_posterior_mean"] = to_json(ref->mean);
  return summary;
}

void write_trace_files(Outputs& out, const fs::path& dir, const std::vector<Smc2Step>& trace,
                       const std::string& model_name) {
  CsvWriter ess_csv(out.csv(dir / "ess_trace.csv"), {"t", "ess", "rejuvenated", "acceptance_rate"});
  CsvWriter ev_csv(out.csv(dir / "evidence.csv"), {"t", "model", "log_evidence"});
  for (const auto& s : trace) {
    ess_csv.cell(s.t).cell(s.ess).cell(s.rejuvenated ? 1 : 0).cell(s.rejuvenated ? s.acceptance_rate : kNaN).end_row();
    ev_csv.cell(s.t).cell(model_name).cell(s.log_evidence).end_row();
  }
}

void plot_ess(Outputs& out, const fs::path& name, const std::vector<Smc2Step>& trace, double threshold) {
  svg::Plot p;
  p.title = "Effective sample size of the theta-particles";
  p.x_label = "t";
  p.y_label = "ESS";
  svg::Line line{{}, {}, "#1f77b4", ""};
  svg::Line marks{{}, {}, "#d62728", "rejuvenation", 1.0, true};
  for (const auto& s : trace) {
    if (s.rejuvenated) {
      line.x.push_back(s.t - 0.5);
      line.y.push_back(s.ess_before);
      line.x.push_back(s.t - 0.5);
      line.y.push_back(s.ess_after_reset);
      marks.x.push_back(s.t - 0.5);
      marks.y.push_back(s.ess_before);
    }
    line.x.push_back(s.t);
    line.y.push_back(s.ess);
  }
  p.lines = {line, marks};
  p.horizontal_rules = {threshold};
  out.plot(name, p);
}

nlohmann::json run_smc(const RunConfig& config, Outputs& out) {
  const auto model = make_model(config, config.model);
  if (!model->has_tractable_likelihood()) {
    throw UsageError("model", "the smc command needs a tractable likelihood (model = lg)");
  }
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  SamplerConfig sc;
  sc.n_theta = config.n_theta;
  sc.ess_threshold = config.ess_threshold;
  sc.n_moves = config.n_moves;
  sc.seed = config.seed;
  sc.workers = config.workers;
  std::vector<Eigen::MatrixXd> quantiles;
  const auto names = model->parameter_names();
  const auto cloud = smc_sampler_run(
      *model, std::span<const double>(ds.y.data(), ds.y.size()), sc, [&](int, const ThetaCloudTractable& c) {
        Eigen::MatrixXd q(c.theta.rows(), std::size(kQuantileLevels));
        for (Eigen::Index i = 0; i < c.theta.rows(); ++i) {
          for (std::size_t j = 0; j < std::size(kQuantileLevels); ++j) {
            q(i, static_cast<Eigen::Index>(j)) =
                weighted_quantile(c.theta.row(i).transpose(), c.weights.w, kQuantileLevels[j]);
          }
        }
        quantiles.push_back(std::move(q));
      });
  std::vector<Smc2Step> trace;
  for (const auto& s : cloud.trace) {
    Smc2Step step;
    step.t = s.t;
    step.ess = s.ess;
    step.rejuvenated = s.rejuvenated;
    step.ess_before = s.ess_before;
    step.ess_after_reset = s.ess_after_reset;
    step.acceptance_rate = s.acceptance_rate;
    step.log_evidence = s.log_evidence;
    trace.push_back(step);
  }
  write_trace_files(out, "", trace, model->name());
  CsvWriter qcsv(out.csv("posterior_quantiles.csv"), {"t", "parameter", "level", "value"});
  for (std::size_t t = 0; t < quantiles.size(); ++t) write_quantiles(qcsv, static_cast<int>(t), names, quantiles[t]);
  plot_ess(out, "ess.svg", trace, config.ess_threshold);
  const Theta truth = truth_theta(config, *model);
  plot_quantiles(out, "posterior_", names, quantiles, &truth);

  int rejuvenations = 0;
  for (const auto& s : trace) rejuvenations += s.rejuvenated;
  nlohmann::json summary{{"log_evidence", cloud.log_evidence},
                         {"rejuvenations", rejuvenations},
                         {"posterior_mean", to_json(weighted_mean(cloud.theta, cloud.weights.w))}};
  if (auto ref = lg_reference(*model, ds.y)) {
    summary["grid_log_evidence"] = ref->log_evidence;
    summary["grid_posterior_mean"] = to_json(ref->mean);
  }
  return summary;
}

Smc2Config smc2_config(const RunConfig& config, std::uint64_t seed) {
  Smc2Config c;
  c.n_theta = config.n_theta;
  c.n_x = config.n_x;
  c.ess_threshold = config.ess_threshold;
  c.n_moves = config.n_moves;
  c.theta_scheme = config.scheme;
  c.x_scheme = config.scheme;
  c.seed = seed;
  c.workers = config.workers;
  return c;
}

nlohmann::json diagnostics_json(const Smc2Diagnostics& d) {
  return {{"log_evidence", d.log_evidence},
          {"rejuvenations_first_half", d.rejuvenations_first_half},
          {"rejuvenations_second_half", d.rejuvenations_second_half},
          {"final_acceptance_rate", d.final_acceptance_rate},
          {"outside_count", d.outside_count},
          {"outside_fraction", d.outside_fraction},
          {"transitions_per_theta", d.transitions_per_theta},
          {"cost_r2", d.cost_r2}};
}

nlohmann::json run_smc2_command(const RunConfig& config, Outputs& out) {
  const auto model = make_model(config, config.model);
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  const std::span<const double> y(ds.y.data(), ds.y.size());
  const auto names = model->parameter_names();
  const auto x = iota_vector(y.size());
  const Theta truth = truth_theta(config, *model);
  const bool same_model = config.generating_model() == config.model && config.data.empty();
  nlohmann::json replicates = nlohmann::json::array();
  for (int r = 0; r < config.replicates; ++r) {
    const fs::path dir = config.replicates == 1 ? fs::path() : fs::path("replicate_" + std::to_string(r));
    const Smc2Run run = run_smc2(*model, y, smc2_config(config, seed_for_replicate(config.seed, r)));
    write_trace_files(out, dir, run.trace, model->name());

    CsvWriter cost(out.csv(dir / "cost.csv"), {"t", "transitions_per_theta", "measurements_per_theta"});
    for (const auto& s : run.trace) cost.cell(s.t).cell(s.transitions_per_theta).cell(s.measurements_per_theta).end_row();

    CsvWriter qcsv(out.csv(dir / "posterior_quantiles.csv"), {"t", "parameter", "level", "value"});
    for (std::size_t t = 0; t < run.quantiles.size(); ++t) {
      write_quantiles(qcsv, static_cast<int>(t), names, run.quantiles[t]);
    }

    CsvWriter pred(out.csv(dir / "predictive.csv"), {"t", "q10", "q90", "y_observed", "outside"});
    for (std::size_t t = 0; t < y.size(); ++t) {
      const double lo = run.band(static_cast<Eigen::Index>(t), 0);
      const double hi = run.band(static_cast<Eigen::Index>(t), 1);
      pred.cell(static_cast<long long>(t)).cell(lo).cell(hi).cell(y[t]).cell(y[t] < lo || y[t] > hi ? 1 : 0).end_row();
    }

    plot_ess(out, dir / "ess.svg", run.trace, config.ess_threshold);
    svg::Plot c;
    c.title = "Cumulative calls to the transition per theta-particle";
    c.x_label = "t";
    c.y_label = "calls";
    svg::Line calls{x, {}, "#1f77b4", ""};
    for (const auto& s : run.trace) calls.y.push_back(s.transitions_per_theta);
    c.lines.push_back(std::move(calls));
    out.plot(dir / "cost.svg", c);
    plot_quantiles(out, (dir / "posterior_").string(), names, run.quantiles, same_model ? &truth : nullptr);
    svg::Plot p;
    p.title = "One-step predictive 80% band";
    p.x_label = "t";
    p.y_label = "y";
    p.log_y = positive_data(*model);
    p.ribbons.push_back({x, to_vector(run.band.col(0)), to_vector(run.band.col(1)), "#1f77b4", 0.3});
    svg::Line inside{{}, {}, "#222222", "inside", 1.0, true};
    svg::Line outside{{}, {}, "#d62728", "outside", 1.0, true};
    for (std::size_t t = 0; t < y.size(); ++t) {
      auto& target = (y[t] < run.band(static_cast<Eigen::Index>(t), 0) || y[t] > run.band(static_cast<Eigen::Index>(t), 1))
                         ? outside
                         : inside;
      target.x.push_back(static_cast<double>(t));
      target.y.push_back(y[t]);
    }
    p.lines = {inside, outside};
    out.plot(dir / "predictive.svg", p);

    nlohmann::json rj = diagnostics_json(diagnose(run, y));
    rj["replicate"] = r;
    rj["seed"] = seed_for_replicate(config.seed, r);
    replicates.push_back(std::move(rj));
  }
  return {{"replicates", replicates}};
}

nlohmann::json run_compare(const RunConfig& config, Outputs& out) {
  const auto first = make_model(config, config.model);
  const auto second = make_model(config, config.alternative);
  const Dataset ds = load_or_simulate(config);
  write_observations(out, ds.y);
  const std::span<const double> y(ds.y.data(), ds.y.size());
  CsvWriter ev(out.csv("evidence.csv"), {"t", "replicate", "model", "log_evidence"});
  CsvWriter bf(out.csv("bayes_factor.csv"), {"t", "replicate", "log_factor", "factor"});
  svg::Plot p;
  p.title = "Bayes factor " + first->name() + " vs " + second->name();
  p.x_label = "t";
  p.y_label = "factor";
  p.log_y = true;
  p.horizontal_rules = {1.0, 100.0};
  svg::Plot e;
  e.title = "Log-evidence";
  e.x_label = "t";
  e.y_label = "log evidence";
  nlohmann::json replicates = nlohmann::json::array();
  for (int r = 0; r < config.replicates; ++r) {
    const auto seed = seed_for_replicate(config.seed, r);
    const Smc2Run a = run_smc2(*first, y, smc2_config(config, seed), false, false);
    const Smc2Run b = run_smc2(*second, y, smc2_config(config, seed), false, false);
    svg::Line line{{}, {}, kPalette[r % 7], "replicate " + std::to_string(r), 1.2};
    svg::Line la{{}, {}, kPalette[r % 7], r == 0 ? first->name() : "", 1.2};
    svg::Line lb{{}, {}, kPalette[r % 7], r == 0 ? second->name() : "", 0.8};
    for (std::size_t t = 0; t < y.size(); ++t) {
      const double za = a.trace[t].log_evidence;
      const double zb = b.trace[t].log_evidence;
      ev.cell(static_cast<long long>(t)).cell(r).cell(first->name()).cell(za).end_row();
      ev.cell(static_cast<long long>(t)).cell(r).cell(second->name()).cell(zb).end_row();
      bf.cell(static_cast<long long>(t)).cell(r).cell(za - zb).cell(bayes_factor(za, zb)).end_row();
      line.x.push_back(static_cast<double>(t));
      line.y.push_back(bayes_factor(za, zb));
      la.x.push_back(static_cast<double>(t));
      la.y.push_back(za);
      lb.x.push_back(static_cast<double>(t));
      lb.y.push_back(zb);
    }
    p.lines.push_back(std::move(line));
    e.lines.push_back(std::move(la));
    e.lines.push_back(std::move(lb));
    const double log_factor = a.trace.back().log_evidence - b.trace.back().log_evidence;
    replicates.push_back({{"replicate", r},
                          {"seed", seed},
                          {"log_evidence", {{first->name(), a.trace.back().log_evidence},
                                            {second->name(), b.trace.back().log_evidence}}},
                          {"log_factor", log_factor}});
  }
  out.plot("bayes_factor.svg", p);
  out.plot("evidence.svg", e);
  return {{"replicates", replicates}};
}

}  // namespace

std::unique_ptr<Model> make_model(const RunConfig& config, std::string_view name) {
  if (name == "lg") {
    validate(config.lg);
    auto prior = std::make_shared<UniformPrior>(UniformPrior::unit_box(static_cast<int>(config.lg_free.size())));
    return std::make_unique<LinearGaussianModel>(config.lg, config.lg_free, std::move(prior));
  }
  if (name == "pz" || name == "pzstar") {
    return std::make_unique<PZModel>(parse_pz_variant(name), config.rk4_step);
  }
  throw UsageError("model", "unknown model '" + std::string(name) + "'");
}

Theta truth_theta(const RunConfig& config, const Model& model) {
  if (const auto* pz = dynamic_cast<const PZModel*>(&model)) {
    return PZModel::reference_theta(pz->variant());
  }
  if (const auto* lg = dynamic_cast<const LinearGaussianModel*>(&model)) {
    Theta theta(lg->dim_theta());
    for (int i = 0; i < theta.size(); ++i) {
      switch (lg->free_fields()[static_cast<std::size_t>(i)]) {
        case LGField::mu0: theta[i] = config.lg.mu0; break;
        case LGField::var0: theta[i] = config.lg.var0; break;
        case LGField::a: theta[i] = config.lg.a; break;
        case LGField::var_x: theta[i] = config.lg.var_x; break;
        case LGField::b: theta[i] = config.lg.b; break;
        case LGField::var_y: theta[i] = config.lg.var_y; break;
      }
    }
    return theta;
  }
  throw Unsupported("no data-generating parameter known for model '" + model.name() + "'");
}

Dataset load_or_simulate(const RunConfig& config) {
  Dataset ds;
  const auto n = static_cast<Eigen::Index>(config.horizon) + 1;
  if (!config.data.empty()) {
    const CsvTable table = read_csv(config.data);
    const auto y = table.numeric_column("y");
    if (static_cast<Eigen::Index>(y.size()) < n) {
      throw UsageError("data", "'" + config.data + "' has " + std::to_string(y.size()) +
                                   " observations but T = " + std::to_string(config.horizon) + " needs " +
                                   std::to_string(n));
    }
    ds.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    return ds;
  }
  const auto model = make_model(config, config.generating_model());
  Rng rng = Rng::stream(config.effective_data_seed(), StreamPurpose::simulate);
  Trajectory tr = simulate(*model, truth_theta(config, *model), config.horizon, rng);
  ds.y = std::move(tr.observations);
  ds.states = std::move(tr.states);
  return ds;
}

Smc2Run run_smc2(const Model& model, std::span<const double> y, const Smc2Config& config, bool record_band,
                 bool record_quantiles) {
  Smc2Run run;
  Smc2State state = smc2_init(model, config);
  const auto n = static_cast<Eigen::Index>(y.size());
  run.band = Eigen::MatrixXd::Constant(n, 2, kNaN);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (record_band) {
      Rng rng = Rng::stream(config.seed, StreamPurpose::predict, static_cast<std::uint64_t>(t));
      const PredictiveBand band = smc2_predict_obs(state, rng);
      run.band.row(t) = band.quantiles.transpose();
    }
    smc2_assimilate(state, y[static_cast<std::size_t>(t)]);
    if (record_quantiles) {
      run.quantiles.push_back(smc2_posterior_quantiles(state, kQuantileLevels));
    }
  }
  run.trace = state.trace;
  run.final_theta = state.theta_matrix();
  run.final_weights = state.weights.w;
  return run;
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ContractViolation("linear fit needs two or more paired points");
  }
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return syy == 0 ? 1.0 : 0.0;
  return sxy * sxy / (sxx * syy);
}

Smc2Diagnostics diagnose(const Smc2Run& run, std::span<const double> y) {
  Smc2Diagnostics d;
  if (run.trace.empty()) return d;
  const double half = static_cast<double>(run.trace.back().t) / 2;
  std::vector<double> ts, calls;
  for (const auto& s : run.trace) {
    if (s.rejuvenated) {
      (s.t <= half ? d.rejuvenations_first_half : d.rejuvenations_second_half) += 1;
      d.final_acceptance_rate = s.acceptance_rate;
    }
    ts.push_back(s.t);
    calls.push_back(s.transitions_per_theta);
  }
  d.transitions_per_theta = calls.back();
  d.cost_r2 = calls.size() >= 2 ? linear_fit_r2(ts, calls) : 1.0;
  d.log_evidence = run.trace.back().log_evidence;
  int counted = 0;
  for (std::size_t t = 1; t < y.size() && static_cast<Eigen::Index>(t) < run.band.rows(); ++t) {
    const double lo = run.band(static_cast<Eigen::Index>(t), 0);
    const double hi = run.band(static_cast<Eigen::Index>(t), 1);
    if (std::isnan(lo)) continue;
    ++counted;
    d.outside_count += (y[t] < lo || y[t] > hi) ? 1 : 0;
  }
  d.outside_fraction = counted > 0 ? static_cast<double>(d.outside_count) / counted : kNaN;
  return d;
}

std::uint64_t seed_for_replicate(std::uint64_t seed, int replicate) {
  if (replicate == 0) return seed;
  return derive_stream(static_cast<std::uint64_t>(StreamPurpose::replicate), seed,
                       static_cast<std::uint64_t>(replicate));
}

ExperimentResult run_experiment(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Outputs out(config.output, config.svg);
  nlohmann::json summary;
  switch (config.command) {
    case Command::simulate: summary = run_simulate(config, out); break;
    case Command::pf: summary = run_pf(config, out); break;
    case Command::abc: summary = run_abc(config, out); break;
    case Command::pmmh: summary = run_pmmh(config, out); break;
    case Command::smc: summary = run_smc(config, out); break;
    case Command::smc2: summary = run_smc2_command(config, out); break;
    case Command::compare: summary = run_compare(config, out); break;
  }
  ExperimentResult result;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.summary = summary;
  result.files = out.files();
  result.files.emplace_back("manifest.json");

  nlohmann::json manifest;
  manifest["command"] = std::string(to_string(config.command));
  manifest["config"] = describe(config);
  manifest["seed"] = config.seed;
  manifest["data_seed"] = config.effective_data_seed();
  manifest["wall_clock_seconds"] = result.seconds;
  std::vector<std::string> files;
  for (const auto& f : result.files) files.push_back(f.generic_string());
  manifest["files"] = files;
  manifest["summary"] = summary;
  std::ofstream mf(out.root() / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) {
    throw IoError("cannot write manifest in '" + out.root().string() + "'");
  }
  mf << manifest.dump(2) << '\n';
  return result;
}

}  // namespace plugsmc
