// Command-line front end: `plugsmc <command> [--config FILE] [--key value ...]`.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plugsmc/errors.hpp"
#include "plugsmc/experiment.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

void print_error(const std::string& kind, const std::string& message, const std::string& key = {}) {
  nlohmann::json line{{"status", "error"}, {"kind", kind}, {"message", message}};
  if (!key.empty()) line["key"] = key;
  std::cerr << line.dump() << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw plugsmc::UsageError("config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-and-play sequential Monte Carlo experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "Flat key = value configuration file");
  std::map<std::string, std::string> flag_values;
  for (const auto& key : plugsmc::config_keys()) {
    if (key == "command") continue;
    app.add_option("--" + key, flag_values[key], "Configuration key " + key);
  }

  const char* descriptions[][2] = {
      {"simulate", "Simulate observations at the data-generating parameter"},
      {"pf", "Bootstrap particle filter at the data-generating parameter"},
      {"abc", "Rejection ABC"},
      {"pmmh", "Particle marginal Metropolis-Hastings"},
      {"smc", "Adaptive SMC sampler (tractable likelihood only)"},
      {"smc2", "SMC2 with predictive bands and cost accounting"},
      {"compare", "Sequential Bayes factor between two models"},
  };
  for (const auto& [name, text] : descriptions) app.add_subcommand(name, text);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    plugsmc::ConfigEntries flags{{"command", app.get_subcommands().front()->get_name()}};
    for (const auto& key : plugsmc::config_keys()) {
      if (key != "command" && app.count("--" + key) > 0) flags.emplace_back(key, flag_values[key]);
    }
    const std::string file_text = config_path.empty() ? std::string() : read_file(config_path);
    const plugsmc::RunConfig config = plugsmc::parse_config(file_text, flags);
    const plugsmc::ExperimentResult result = plugsmc::run_experiment(config);
    nlohmann::json line{{"status", "ok"},
                        {"command", std::string(plugsmc::to_string(config.command))},
                        {"output", config.output},
                        {"seconds", result.seconds},
                        {"summary", result.summary}};
    std::cout << line.dump() << '\n';
    return 0;
  } catch (const plugsmc::UsageError& e) {
    print_error(e.kind(), e.what(), e.key());
    return kExitUsage;
  } catch (const plugsmc::Error& e) {
    print_error(e.kind(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitFailure;
  }
}
