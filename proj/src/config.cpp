#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include "plugsmc/errors.hpp"
#include "plugsmc/experiment.hpp"

namespace plugsmc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

long long to_integer(const std::string& key, const std::string& text, long long min) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError(key, "expected an integer, got '" + text + "'");
  }
  if (v < min) {
    throw UsageError(key, "must be at least " + std::to_string(min) + ", got " + text);
  }
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError(key, "expected a nonnegative integer seed, got '" + text + "'");
  }
  return v;
}

double to_real(const std::string& key, const std::string& text) {
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || std::isnan(v)) {
    throw UsageError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

bool to_flag(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw UsageError(key, "expected true or false, got '" + text + "'");
}

void check_model_name(const std::string& key, const std::string& name) {
  if (name != "lg" && name != "pz" && name != "pzstar") {
    throw UsageError(key, "unknown model '" + name + "' (expected lg, pz or pzstar)");
  }
}

void apply_profile(RunConfig& c, Profile profile) {
  c.profile = profile;
  c.horizon = 365;
  c.ess_threshold = 0.5;
  c.n_moves = 5;
  if (profile == Profile::paper) {
    c.n_theta = 1024;
    c.n_x = 1024;
  } else {
    c.n_theta = 128;
    c.n_x = 256;
  }
}

std::vector<LGField> to_fields(const std::string& key, const std::string& text) {
  std::vector<LGField> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const std::string name(trim(rest.substr(0, comma)));
    try {
      out.push_back(parse_lg_field(name));
    } catch (const Error&) {
      throw UsageError(key, "unknown linear-Gaussian field '" + name + "'");
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw UsageError(key, "fields must be distinct");
  }
  return out;
}

}  // namespace

Command parse_command(std::string_view name) {
  static const std::pair<std::string_view, Command> table[] = {
      {"simulate", Command::simulate}, {"pf", Command::pf},     {"abc", Command::abc},
      {"pmmh", Command::pmmh},         {"smc", Command::smc},   {"smc2", Command::smc2},
      {"compare", Command::compare}};
  for (const auto& [text, command] : table) {
    if (text == name) return command;
  }
  throw UsageError("command", "unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::pf: return "pf";
    case Command::abc: return "abc";
    case Command::pmmh: return "pmmh";
    case Command::smc: return "smc";
    case Command::smc2: return "smc2";
    case Command::compare: return "compare";
  }
  return "?";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "command",   "model",     "alternative", "data_model",  "profile",  "T",
      "n_theta",   "n_x",       "ess_threshold", "n_moves",   "rk4_step", "seed",
      "data_seed", "data",      "replicates",  "output",      "scheme",   "epsilon",
      "n_accept",  "max_attempts", "n_iters",  "proposal_sd", "workers",  "svg",
      "lg_mu0",    "lg_var0",   "lg_a",        "lg_var_x",    "lg_b",     "lg_var_y",
      "lg_free",
  };
  return keys;
}

ConfigEntries parse_key_values(std::string_view text) {
  ConfigEntries out;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw UsageError("", "line " + std::to_string(line_no) + ": missing key");
    }
    out.emplace_back(key, std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

RunConfig parse_config(std::string_view file_text, const ConfigEntries& flags) {
  return parse_config(parse_key_values(file_text), flags);
}

RunConfig parse_config(const ConfigEntries& file, const ConfigEntries& flags) {
  const auto& keys = config_keys();
  std::map<std::string, std::string> values;
  for (const auto* source : {&file, &flags}) {
    for (const auto& [key, value] : *source) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw UsageError(key, "unknown configuration key");
      }
      values[key] = value;
    }
  }

  RunConfig c;
  if (auto it = values.find("profile"); it != values.end()) {
    if (it->second == "paper") {
      apply_profile(c, Profile::paper);
    } else if (it->second == "desk") {
      apply_profile(c, Profile::desk);
    } else {
      throw UsageError("profile", "expected paper or desk, got '" + it->second + "'");
    }
  }

  for (const auto& [key, v] : values) {
    if (key == "profile") continue;
    if (key == "command") {
      c.command = parse_command(v);
    } else if (key == "model") {
      check_model_name(key, v);
      c.model = v;
    } else if (key == "alternative") {
      check_model_name(key, v);
      c.alternative = v;
    } else if (key == "data_model") {
      check_model_name(key, v);
      c.data_model = v;
    } else if (key == "T") {
      c.horizon = static_cast<int>(to_integer(key, v, 0));
    } else if (key == "n_theta") {
      c.n_theta = static_cast<int>(to_integer(key, v, 1));
    } else if (key == "n_x") {
      c.n_x = static_cast<int>(to_integer(key, v, 1));
    } else if (key == "ess_threshold") {
      c.ess_threshold = to_real(key, v);
      if (!(c.ess_threshold > 0 && c.ess_threshold < 1)) {
        throw UsageError(key, "must lie strictly between 0 and 1, got " + v);
      }
    } else if (key == "n_moves") {
      c.n_moves = static_cast<int>(to_integer(key, v, 0));
    } else if (key == "rk4_step") {
      c.rk4_step = to_real(key, v);
      const double per_day = 1.0 / c.rk4_step;
      if (!(c.rk4_step > 0) || std::abs(per_day - std::round(per_day)) > 1e-9 * per_day) {
        throw UsageError(key, "must be positive and divide one day, got " + v);
      }
    } else if (key == "seed") {
      c.seed = to_seed(key, v);
    } else if (key == "data_seed") {
      c.data_seed = to_seed(key, v);
    } else if (key == "data") {
      c.data = v;
    } else if (key == "replicates") {
      c.replicates = static_cast<int>(to_integer(key, v, 1));
    } else if (key == "output") {
      if (v.empty()) throw UsageError(key, "must not be empty");
      c.output = v;
    } else if (key == "scheme") {
      try {
        c.scheme = parse_scheme(v);
      } catch (const Error&) {
        throw UsageError(key, "expected multinomial or systematic, got '" + v + "'");
      }
    } else if (key == "epsilon") {
      c.epsilon = to_real(key, v);
      if (!(c.epsilon >= 0)) throw UsageError(key, "must be nonnegative, got " + v);
    } else if (key == "n_accept") {
      c.n_accept = static_cast<int>(to_integer(key, v, 1));
    } else if (key == "max_attempts") {
      c.max_attempts = static_cast<long>(to_integer(key, v, 1));
    } else if (key == "n_iters") {
      c.n_iters = static_cast<int>(to_integer(key, v, 1));
    } else if (key == "proposal_sd") {
      c.proposal_sd = to_real(key, v);
      if (!(c.proposal_sd >= 0) || std::isinf(c.proposal_sd)) {
        throw UsageError(key, "must be finite and nonnegative, got " + v);
      }
    } else if (key == "workers") {
      c.workers = static_cast<int>(to_integer(key, v, 0));
    } else if (key == "svg") {
      c.svg = to_flag(key, v);
    } else if (key == "lg_free") {
      c.lg_free = to_fields(key, v);
    } else if (key.starts_with("lg_")) {
      const double x = to_real(key, v);
      if (!std::isfinite(x)) throw UsageError(key, "must be finite, got " + v);
      const LGField field = parse_lg_field(key.substr(3));
      switch (field) {
        case LGField::mu0: c.lg.mu0 = x; break;
        case LGField::var0: c.lg.var0 = x; break;
        case LGField::a: c.lg.a = x; break;
        case LGField::var_x: c.lg.var_x = x; break;
        case LGField::b: c.lg.b = x; break;
        case LGField::var_y: c.lg.var_y = x; break;
      }
      if (key.starts_with("lg_var") && x < 0) throw UsageError(key, "variance must be nonnegative, got " + v);
    }
  }

  if (!values.contains("seed")) {
    throw UsageError("seed", "a seed is required (runs are never seeded from the clock)");
  }
  if (c.max_attempts < c.n_accept) {
    throw UsageError("max_attempts", "must be at least n_accept");
  }
  return c;
}

nlohmann::json describe(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = std::string(to_string(c.command));
  j["model"] = c.model;
  j["alternative"] = c.alternative;
  j["data_model"] = c.generating_model();
  j["profile"] = c.profile == Profile::paper ? "paper" : "desk";
  j["T"] = c.horizon;
  j["n_theta"] = c.n_theta;
  j["n_x"] = c.n_x;
  j["ess_threshold"] = c.ess_threshold;
  j["n_moves"] = c.n_moves;
  j["rk4_step"] = c.rk4_step;
  j["seed"] = c.seed;
  j["data_seed"] = c.effective_data_seed();
  j["data"] = c.data;
  j["replicates"] = c.replicates;
  j["output"] = c.output;
  j["scheme"] = std::string(to_string(c.scheme));
  j["epsilon"] = c.epsilon;
  j["n_accept"] = c.n_accept;
  j["max_attempts"] = c.max_attempts;
  j["n_iters"] = c.n_iters;
  j["proposal_sd"] = c.proposal_sd;
  j["workers"] = c.workers;
  j["svg"] = c.svg;
  j["lg"] = {{"mu0", c.lg.mu0}, {"var0", c.lg.var0}, {"a", c.lg.a},
             {"var_x", c.lg.var_x}, {"b", c.lg.b},     {"var_y", c.lg.var_y}};
  std::vector<std::string> free;
  for (LGField f : c.lg_free) free.emplace_back(to_string(f));
  j["lg_free"] = free;
  return j;
}

}  // namespace plugsmc
