#pragma once

// Suite manifests, the parallel suite runner and success-rate reports.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/extraction.hpp"
#include "duplex/orchestrator.hpp"

namespace duplex {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FaultSpec {
  FaultKind kind = FaultKind::OmitInitFact;
  std::uint64_t seed = 0;
};

struct SuiteEntry {
  std::string task_id;
  std::filesystem::path domain;
  std::filesystem::path task;
  /// Ground-truth record; feeds the scripted extractor and the repair oracle.
  std::optional<std::filesystem::path> record;
  bool solvable = true;
  int repetitions = 1;
  std::optional<FaultSpec> fault;
};

struct SuiteManifest {
  std::string name;
  std::vector<SuiteEntry> entries;

  /// Paths in the file are relative to its directory. Throws ManifestError
  /// for malformed documents and unresolvable paths.
  static SuiteManifest load(const std::filesystem::path& path);
  static SuiteManifest parse(std::string_view text, const std::filesystem::path& base_dir);
};

enum class Arm { Fast, Duplex };
std::string_view to_string(Arm arm);
std::optional<Arm> arm_from_string(std::string_view name);

struct RateStats {
  int runs = 0;
  int solved = 0;
  double sr = 0.0;
  bool operator==(const RateStats&) const = default;
};

struct TimingSummary {
  double p50 = 0.0;
  double p90 = 0.0;
  double max = 0.0;
  bool operator==(const TimingSummary&) const = default;
};

struct SuiteReport {
  std::string suite;
  Arm arm = Arm::Fast;
  int runs = 0;
  int solved = 0;
  double overall_sr = 0.0;
  /// Unweighted mean of the per-domain rates.
  double domain_average_sr = 0.0;
  std::map<std::string, RateStats> per_domain;
  /// Keyed by fault kind name; "solved" counts recovered runs.
  std::map<std::string, RateStats> per_fault;
  /// Failure class -> count; sums to runs - solved.
  std::map<std::string, int> failure_histogram;
  int repair_calls_clean = 0;
  int repair_calls_faulted = 0;
  /// Runs whose outcome disagrees with the entry's solvability flag.
  int expectation_mismatches = 0;
  /// Wall-clock run times; left out unless requested since they vary.
  std::optional<TimingSummary> timing;

  bool operator==(const SuiteReport&) const = default;
};

struct SuiteOptions {
  Arm arm = Arm::Duplex;
  /// Added to every fault seed.
  std::uint64_t base_seed = 0;
  /// 0 = one per logical core.
  int threads = 0;
  bool include_timing = false;
};

struct SuiteResult {
  SuiteReport report;
  /// One per (entry, repetition), entry-major in manifest order.
  std::vector<RunRecord> runs;
};

/// Uses config.extractor / config.repair_agent when set; otherwise a scripted
/// extractor and the repair oracle built from the entries' records.
SuiteResult run_suite(const SuiteManifest& manifest, const PipelineConfig& config, const SuiteOptions& options);
/// Single-threaded reference with identical semantics.
SuiteResult run_suite_serial(const SuiteManifest& manifest, const PipelineConfig& config,
                             const SuiteOptions& options);

enum class ReportFormat { Table, Machine };
std::string emit_report(const SuiteReport& report, ReportFormat format);
/// Reads MACHINE output back.
SuiteReport parse_suite_report(std::string_view machine_text);

}  // namespace duplex
