#pragma once

// Run settings shared by the CLI subcommands, resolved from flags,
// environment, an optional JSON config file and defaults, in that order.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "duplex/harness.hpp"

namespace duplex::cli {

struct Settings {
  Arm arm = Arm::Duplex;
  int max_iters = 3;
  double llm_budget = 60.0;
  double planner_budget = 500.0;
  SolverKind solver = SolverKind::Internal;
  std::string solver_cmd = planning::ExternalSolverConfig{}.command_template;
  std::uint64_t seed = 0;
  ReportFormat format = ReportFormat::Table;
  /// Suite worker threads; 0 = one per logical core.
  int threads = 0;
};

/// Setting name (flag spelling without dashes) -> raw value.
using Layer = std::map<std::string, std::string>;

/// Known setting names: arm, max-iters, llm-budget, planner-budget, solver,
/// solver-cmd, seed, format, threads.
const std::vector<std::string>& setting_names();

/// DUPLEX_ARM, DUPLEX_MAX_ITERS, ... for every known setting.
std::string env_name(const std::string& setting);

/// Reads a JSON object; keys may use '-' or '_'. Throws std::runtime_error on
/// unreadable files, non-objects and unknown keys.
Layer load_config_file(const std::filesystem::path& path);

Layer environment_layer(const std::function<const char*(const char*)>& getenv_fn);

/// Throws std::invalid_argument naming the setting on bad values.
void apply(Settings& s, const std::string& name, const std::string& value);

Settings resolve(const Layer& file, const Layer& env, const Layer& flags);

PipelineConfig pipeline_config(const Settings& s);

}  // namespace duplex::cli
