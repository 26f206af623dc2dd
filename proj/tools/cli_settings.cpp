#include "cli_settings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace duplex::cli {

namespace {

double parse_seconds(const std::string& name, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !std::isfinite(v) || v <= 0) {
    throw std::invalid_argument(name + ": expected a positive number of seconds, got '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& name, const std::string& value, long long lo) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || v < lo) {
    throw std::invalid_argument(name + ": expected an integer >= " + std::to_string(lo) + ", got '" + value + "'");
  }
  return v;
}

std::chrono::milliseconds to_ms(double seconds) {
  return std::chrono::milliseconds(std::max<long long>(1, std::llround(seconds * 1000.0)));
}

}  // namespace

const std::vector<std::string>& setting_names() {
  static const std::vector<std::string> names{"arm",    "max-iters",  "llm-budget", "planner-budget", "solver",
                                              "solver-cmd", "seed", "format",     "threads"};
  return names;
}

std::string env_name(const std::string& setting) {
  std::string out = "DUPLEX_";
  for (char c : setting) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Layer load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config file " + path.string() + " must hold a JSON object");
  Layer layer;
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    const auto& names = setting_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw std::runtime_error("config file " + path.string() + ": unknown key '" + key + "'");
    }
    layer[name] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return layer;
}

Layer environment_layer(const std::function<const char*(const char*)>& getenv_fn) {
  Layer layer;
  for (const auto& name : setting_names()) {
    if (const char* v = getenv_fn(env_name(name).c_str()); v && *v) layer[name] = v;
  }
  return layer;
}

void apply(Settings& s, const std::string& name, const std::string& value) {
  if (name == "arm") {
    const auto a = arm_from_string(value);
    if (!a) throw std::invalid_argument("arm: expected fast or duplex, got '" + value + "'");
    s.arm = *a;
  } else if (name == "max-iters") {
    s.max_iters = static_cast<int>(parse_int(name, value, 0));
  } else if (name == "llm-budget") {
    s.llm_budget = parse_seconds(name, value);
  } else if (name == "planner-budget") {
    s.planner_budget = parse_seconds(name, value);
  } else if (name == "solver") {
    if (value == "internal") {
      s.solver = SolverKind::Internal;
    } else if (value == "external") {
      s.solver = SolverKind::External;
    } else {
      throw std::invalid_argument("solver: expected internal or external, got '" + value + "'");
    }
  } else if (name == "solver-cmd") {
    if (value.empty()) throw std::invalid_argument("solver-cmd: empty command");
    s.solver_cmd = value;
  } else if (name == "seed") {
    s.seed = static_cast<std::uint64_t>(parse_int(name, value, 0));
  } else if (name == "format") {
    if (value == "table") {
      s.format = ReportFormat::Table;
    } else if (value == "machine") {
      s.format = ReportFormat::Machine;
    } else {
      throw std::invalid_argument("format: expected table or machine, got '" + value + "'");
    }
  } else if (name == "threads") {
    s.threads = static_cast<int>(parse_int(name, value, 0));
  } else {
    throw std::invalid_argument("unknown setting '" + name + "'");
  }
}

Settings resolve(const Layer& file, const Layer& env, const Layer& flags) {
  Settings s;
  for (const Layer* layer : {&file, &env, &flags}) {
    for (const auto& [name, value] : *layer) apply(s, name, value);
  }
  return s;
}

PipelineConfig pipeline_config(const Settings& s) {
  PipelineConfig cfg;
  cfg.max_reflection_iters = s.arm == Arm::Fast ? 0 : s.max_iters;
  cfg.llm_time_budget = to_ms(s.llm_budget);
  cfg.planner_time_budget = to_ms(s.planner_budget);
  cfg.solver = s.solver;
  cfg.external.command_template = s.solver_cmd;
  return cfg;
}

}  // namespace duplex::cli
