#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "plugsmc/csv.hpp"
#include "plugsmc/errors.hpp"
#include "plugsmc/experiment.hpp"
#include "plugsmc/svg.hpp"
#include "properties.hpp"

namespace plugsmc {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plugsmc_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig config(ConfigEntries flags) { return parse_config(ConfigEntries{}, flags); }

TEST(Config, PaperProfileDefaults) {
  const RunConfig c = parse_config("profile = paper\nseed = 1\n", {});
  EXPECT_EQ(c.n_theta, 1024);
  EXPECT_EQ(c.n_x, 1024);
  EXPECT_DOUBLE_EQ(c.ess_threshold, 0.5);
  EXPECT_EQ(c.n_moves, 5);
  EXPECT_EQ(c.horizon, 365);
  EXPECT_EQ(c.command, Command::smc2);
}

TEST(Config, DeskProfile) {
  const RunConfig c = config({{"profile", "desk"}, {"seed", "1"}});
  EXPECT_EQ(c.n_theta, 128);
  EXPECT_EQ(c.n_x, 256);
  EXPECT_EQ(c.horizon, 365);
}

TEST(Config, ThresholdOutOfRange) {
  try {
    config({{"seed", "1"}, {"ess_threshold", "1.5"}});
    FAIL() << "expected a usage error";
  } catch (const UsageError& e) {
    EXPECT_EQ(e.key(), "ess_threshold");
  }
}

TEST(Config, FlagOverridesFile) {
  const RunConfig c = parse_config("seed = 3\nn_x = 100\n", {{"n_x", "250"}});
  EXPECT_EQ(c.n_x, 250);
  EXPECT_EQ(c.seed, 3u);
}

TEST(Config, ExplicitKeysOverrideProfile) {
  const RunConfig c = parse_config("n_theta = 64\nprofile = desk\nseed = 1\n", {});
  EXPECT_EQ(c.n_theta, 64);
  EXPECT_EQ(c.n_x, 256);
}

TEST(Config, SeedIsRequired) {
  try {
    parse_config("n_x = 10\n", {});
    FAIL() << "expected a usage error";
  } catch (const UsageError& e) {
    EXPECT_EQ(e.key(), "seed");
  }
}

TEST(Config, UnknownKeyRejected) {
  try {
    parse_config("seed = 1\nparticles = 10\n", {});
    FAIL() << "expected a usage error";
  } catch (const UsageError& e) {
    EXPECT_EQ(e.key(), "particles");
  }
}

TEST(Config, InvalidValuesNameTheirKey) {
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"n_x", "0"}, {"n_theta", "-4"}, {"T", "x"}, {"rk4_step", "0.3"}, {"scheme", "stratified"},
           {"model", "sir"}, {"command", "fit"}, {"replicates", "0"}, {"epsilon", "-1"}, {"svg", "maybe"},
           {"lg_free", "a,a"}, {"lg_var_y", "-2"}, {"proposal_sd", "nan"}}) {
    try {
      config({{"seed", "1"}, {key, value}});
      ADD_FAILURE() << key << " = " << value << " accepted";
    } catch (const UsageError& e) {
      EXPECT_EQ(e.key(), key) << value;
    }
  }
}

TEST(Config, CommentsAndBlankLines) {
  const auto entries = parse_key_values("# header\n\nseed = 9   # trailing\n  model=lg\n");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1], (std::pair<std::string, std::string>{"model", "lg"}));
  EXPECT_THROW(parse_key_values("seed 9\n"), UsageError);
}

TEST(Config, DescribeReportsResolvedValues) {
  const RunConfig c = config({{"seed", "5"}, {"model", "lg"}, {"lg_free", "a,var_y"}, {"n_x", "77"}, {"profile", "desk"}});
  const auto j = describe(c);
  EXPECT_EQ(j["n_x"], 77);
  EXPECT_EQ(j["n_theta"], 128);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["data_seed"], 5);
  EXPECT_EQ(j["data_model"], "lg");
  EXPECT_EQ(j["lg_free"], nlohmann::json::array({"a", "var_y"}));
  EXPECT_EQ(j["lg"]["a"], 0.9);
  EXPECT_EQ(j["scheme"], "systematic");
  EXPECT_EQ(j["svg"], true);
}

TEST(Csv, NumbersRoundTrip) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "a.csv", {"t", "x", "name"});
    w.cell(0).cell(0.1).cell("first").end_row();
    w.cell(1).cell(-1e-300).cell("second").end_row();
    w.cell(2).cell(std::numeric_limits<double>::quiet_NaN()).cell("third").end_row();
  }
  const CsvTable t = read_csv(dir / "a.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  const auto x = t.numeric_column("x");
  EXPECT_EQ(x[0], 0.1);
  EXPECT_EQ(x[1], -1e-300);
  EXPECT_TRUE(std::isnan(x[2]));
  EXPECT_EQ(t.rows[1][t.column("name")], "second");
}

TEST(Csv, RowWidthIsChecked) {
  const fs::path dir = scratch("csv_width");
  fs::create_directories(dir);
  CsvWriter w(dir / "a.csv", {"t", "x"});
  w.cell(0);
  EXPECT_THROW(w.end_row(), Error);
}

TEST(Svg, RendersStandaloneDocument) {
  svg::Plot p;
  p.title = "demo <1>";
  p.log_y = true;
  p.lines.push_back({{0, 1, 2, 3}, {1, 10, std::nan(""), 100}, "#123456", "series"});
  p.ribbons.push_back({{0, 1, 2}, {0.5, 5, 50}, {2, 20, 200}, "#abcdef", 0.3});
  const std::string doc = svg::render(p);
  EXPECT_EQ(doc.rfind("<svg", 0), 0u);
  EXPECT_NE(doc.find("</svg>"), std::string::npos);
  EXPECT_NE(doc.find("demo &lt;1&gt;"), std::string::npos);
  EXPECT_NE(doc.find("series"), std::string::npos);
  EXPECT_EQ(doc.find("nan"), std::string::npos);
}

TEST(Experiment, SimulateIsByteIdentical) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  run_experiment(config({{"command", "simulate"}, {"seed", "4"}, {"T", "30"}, {"output", a.string()}}));
  run_experiment(config({{"command", "simulate"}, {"seed", "4"}, {"T", "30"}, {"output", b.string()}}));
  EXPECT_EQ(slurp(a / "observations.csv"), slurp(b / "observations.csv"));
  EXPECT_EQ(read_csv(a / "observations.csv").rows.size(), 31u);
  EXPECT_EQ(read_csv(a / "states.csv").header, (std::vector<std::string>{"t", "alpha", "log_p", "log_z"}));
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 4);
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
  EXPECT_EQ(manifest["config"]["T"], 30);
}

TEST(Experiment, FilterCarriesKalmanColumns) {
  const fs::path dir = scratch("pf");
  run_experiment(
      config({{"command", "pf"}, {"model", "lg"}, {"seed", "5"}, {"T", "40"}, {"n_x", "20000"}, {"output", dir.string()}}));
  const CsvTable t = read_csv(dir / "filter.csv");
  ASSERT_EQ(t.rows.size(), 41u);
  const auto pf = t.numeric_column("mean_x");
  const auto kf = t.numeric_column("kalman_mean");
  for (std::size_t i = 0; i < pf.size(); ++i) EXPECT_NEAR(pf[i], kf[i], 0.05);
}

TEST(Experiment, Smc2WritesEveryTable) {
  const fs::path dir = scratch("smc2");
  const auto result = run_experiment(config({{"command", "smc2"}, {"seed", "6"}, {"T", "20"}, {"n_theta", "24"},
                                             {"n_x", "24"}, {"rk4_step", "0.1"}, {"output", dir.string()}}));
  for (const char* name : {"ess_trace.csv", "cost.csv", "posterior_quantiles.csv", "predictive.csv", "evidence.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_EQ(read_csv(dir / "ess_trace.csv").header,
            (std::vector<std::string>{"t", "ess", "rejuvenated", "acceptance_rate"}));
  EXPECT_EQ(read_csv(dir / "ess_trace.csv").rows.size(), 21u);
  EXPECT_EQ(read_csv(dir / "cost.csv").rows.size(), 21u);
  EXPECT_EQ(read_csv(dir / "predictive.csv").header,
            (std::vector<std::string>{"t", "q10", "q90", "y_observed", "outside"}));
  EXPECT_EQ(read_csv(dir / "posterior_quantiles.csv").rows.size(), 21u * 5u * 9u);
  EXPECT_TRUE(fs::exists(dir / "predictive.svg"));
  EXPECT_EQ(result.summary["replicates"].size(), 1u);
}

TEST(Experiment, CompareWritesOneTrajectoryPerReplicate) {
  const fs::path dir = scratch("compare");
  run_experiment(config({{"command", "compare"}, {"seed", "7"}, {"T", "10"}, {"n_theta", "16"}, {"n_x", "16"},
                         {"rk4_step", "0.1"}, {"replicates", "3"}, {"output", dir.string()}}));
  const CsvTable bf = read_csv(dir / "bayes_factor.csv");
  EXPECT_EQ(bf.rows.size(), 33u);
  EXPECT_EQ(bf.header, (std::vector<std::string>{"t", "replicate", "log_factor", "factor"}));
  EXPECT_EQ(read_csv(dir / "evidence.csv").rows.size(), 66u);
}

TEST(Experiment, ReplicatesGetTheirOwnDirectories) {
  const fs::path dir = scratch("smc2_reps");
  run_experiment(config({{"command", "smc2"}, {"seed", "8"}, {"T", "6"}, {"n_theta", "8"}, {"n_x", "8"},
                         {"rk4_step", "0.1"}, {"replicates", "2"}, {"svg", "false"}, {"output", dir.string()}}));
  EXPECT_TRUE(fs::exists(dir / "replicate_0" / "ess_trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "replicate_1" / "predictive.csv"));
  EXPECT_FALSE(fs::exists(dir / "replicate_1" / "predictive.svg"));
  EXPECT_NE(seed_for_replicate(8, 1), 8u);
  EXPECT_EQ(seed_for_replicate(8, 0), 8u);
}

TEST(Experiment, DataFileIsUsed) {
  const fs::path dir = scratch("data");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "y.csv", {"t", "y"});
    for (int t = 0; t < 12; ++t) w.cell(t).cell(0.5 * t).end_row();
  }
  run_experiment(config({{"command", "smc"}, {"model", "lg"}, {"seed", "9"}, {"T", "11"}, {"n_theta", "50"},
                         {"data", (dir / "y.csv").string()}, {"output", (dir / "out").string()}}));
  const auto y = read_csv(dir / "out" / "observations.csv").numeric_column("y");
  EXPECT_EQ(y.back(), 5.5);
  EXPECT_THROW(run_experiment(config({{"command", "smc"}, {"model", "lg"}, {"seed", "9"}, {"T", "20"},
                                      {"data", (dir / "y.csv").string()}, {"output", (dir / "out2").string()}})),
               UsageError);
}

TEST(Experiment, SmcNeedsTractableModel) {
  EXPECT_THROW(run_experiment(config({{"command", "smc"}, {"seed", "1"}, {"T", "3"}, {"output", scratch("smc_pz").string()}})),
               UsageError);
}

TEST(Experiment, UnwritableOutputIsReported) {
  const fs::path dir = scratch("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(run_experiment(config({{"command", "simulate"}, {"seed", "1"}, {"output", (dir / "file" / "out").string()}})),
               IoError);
}

TEST(Experiment, DiagnosticsFromATrace) {
  Smc2Run run;
  for (int t = 0; t <= 10; ++t) {
    Smc2Step s;
    s.t = t;
    s.transitions_per_theta = 100.0 * (t + 1);
    s.rejuvenated = t == 2 || t == 4 || t == 8;
    s.acceptance_rate = 0.1 * t;
    run.trace.push_back(s);
  }
  run.band = Eigen::MatrixXd(11, 2);
  run.band.col(0).setConstant(-1);
  run.band.col(1).setConstant(1);
  std::vector<double> y(11, 0.0);
  y[0] = 5;
  y[3] = 2;
  y[7] = -3;
  const Smc2Diagnostics d = diagnose(run, y);
  EXPECT_EQ(d.rejuvenations_first_half, 2);
  EXPECT_EQ(d.rejuvenations_second_half, 1);
  EXPECT_DOUBLE_EQ(d.final_acceptance_rate, 0.8);
  EXPECT_EQ(d.outside_count, 2);
  EXPECT_DOUBLE_EQ(d.outside_fraction, 0.2);
  EXPECT_DOUBLE_EQ(d.transitions_per_theta, 1100.0);
  EXPECT_NEAR(d.cost_r2, 1.0, 1e-12);
}

TEST(Experiment, LinearFitR2) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 2, 4};
  EXPECT_NEAR(linear_fit_r2(x, y), 0.64, 1e-12);
}

TEST(Experiment, EveryCommandIsDeterministic) {
  const auto r = testing::check_command_determinism(scratch("determinism"));
  EXPECT_TRUE(r.ok) << r.detail;
}

}  // namespace
}  // namespace plugsmc
