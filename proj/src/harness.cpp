#include "duplex/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace duplex {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& rel, const std::string& what) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::is_regular_file(p)) throw ManifestError(what + " not found: " + p.string());
  return p.lexically_normal();
}

/// Everything a run needs, loaded once before the runs start.
struct PreparedEntry {
  const SuiteEntry* entry = nullptr;
  std::shared_ptr<const DomainInput> domain;
  ExtractionTask task;
  std::optional<std::string> record_wire;
};

struct Prepared {
  std::vector<PreparedEntry> entries;
  std::shared_ptr<const RepairAgent> oracle;
  /// (entry index, repetition) per run.
  std::vector<std::pair<std::size_t, int>> runs;
};

Prepared prepare(const SuiteManifest& manifest, const PipelineConfig& config) {
  Prepared p;
  std::map<fs::path, std::shared_ptr<const DomainInput>> domains;
  auto oracle = std::make_shared<OracleRepairAgent>();
  for (const auto& e : manifest.entries) {
    PreparedEntry pe;
    pe.entry = &e;
    auto& d = domains[e.domain];
    if (!d) {
      try {
        d = std::make_shared<const DomainInput>(DomainInput::from_text(read_file(e.domain)));
      } catch (const pddl::PddlError& err) {
        throw ManifestError("domain " + e.domain.string() + ": " + err.what());
      }
    }
    pe.domain = d;
    pe.task = ExtractionTask{e.task_id, read_file(e.task)};
    if (e.record) {
      pe.record_wire = read_file(*e.record);
      try {
        oracle->add(e.task_id, parse_record(*pe.record_wire));
      } catch (const std::exception& err) {
        throw ManifestError("record " + e.record->string() + ": " + err.what());
      }
    } else if (!config.extractor) {
      throw ManifestError("entry '" + e.task_id + "' has no record and no extractor is configured");
    }
    p.entries.push_back(std::move(pe));
  }
  p.oracle = std::move(oracle);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    for (int r = 0; r < manifest.entries[i].repetitions; ++r) p.runs.emplace_back(i, r);
  }
  return p;
}

RunRecord execute(const Prepared& p, std::size_t run_index, const PipelineConfig& base, const SuiteOptions& options) {
  const auto [entry_index, rep] = p.runs[run_index];
  const PreparedEntry& pe = p.entries[entry_index];
  PipelineConfig cfg = base;
  std::shared_ptr<const Extractor> extractor = cfg.extractor;
  if (!extractor) {
    extractor = std::make_shared<ScriptedExtractor>(std::map<std::string, std::string>{{pe.task.id, *pe.record_wire}});
  }
  if (pe.entry->fault) {
    const std::uint64_t seed = pe.entry->fault->seed + static_cast<std::uint64_t>(rep) + options.base_seed;
    extractor = std::make_shared<FaultInjectingExtractor>(extractor, pe.entry->fault->kind, seed);
  }
  cfg.extractor = extractor;
  if (!cfg.repair_agent) cfg.repair_agent = p.oracle;
  return options.arm == Arm::Fast ? run_fast(pe.task, *pe.domain, cfg) : run_duplex(pe.task, *pe.domain, cfg);
}

double rate(int solved, int runs) { return runs == 0 ? 0.0 : 100.0 * solved / runs; }

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

SuiteReport aggregate(const SuiteManifest& manifest, const Prepared& p, const std::vector<RunRecord>& runs,
                      const SuiteOptions& options) {
  SuiteReport r;
  r.suite = manifest.name;
  r.arm = options.arm;
  std::vector<double> times;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const PreparedEntry& pe = p.entries[p.runs[i].first];
    const RunRecord& run = runs[i];
    const bool solved = run.status == RunStatus::Solved;
    ++r.runs;
    r.solved += solved;
    auto& dom = r.per_domain[pe.domain->domain.name];
    ++dom.runs;
    dom.solved += solved;
    if (pe.entry->fault) {
      auto& f = r.per_fault[std::string(to_string(pe.entry->fault->kind))];
      ++f.runs;
      f.solved += solved;
      r.repair_calls_faulted += run.repair_calls;
    } else {
      r.repair_calls_clean += run.repair_calls;
    }
    if (!solved) ++r.failure_histogram[std::string(to_string(run.failure))];
    if (solved != pe.entry->solvable) ++r.expectation_mismatches;
    times.push_back(run.total_seconds);
  }
  r.overall_sr = rate(r.solved, r.runs);
  double sum = 0.0;
  for (auto& [name, d] : r.per_domain) {
    d.sr = rate(d.solved, d.runs);
    sum += d.sr;
  }
  r.domain_average_sr = r.per_domain.empty() ? 0.0 : sum / static_cast<double>(r.per_domain.size());
  for (auto& [name, f] : r.per_fault) f.sr = rate(f.solved, f.runs);
  if (options.include_timing) r.timing = TimingSummary{percentile(times, 0.5), percentile(times, 0.9), percentile(times, 1.0)};
  return r;
}

}  // namespace

SuiteManifest SuiteManifest::load(const fs::path& path) {
  return parse(read_file(path), path.parent_path());
}

SuiteManifest SuiteManifest::parse(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  SuiteManifest m;
  try {
    m.name = j.at("suite").get<std::string>();
    std::set<std::string> ids;
    for (const auto& e : j.at("entries")) {
      SuiteEntry entry;
      entry.task_id = e.at("task_id").get<std::string>();
      if (entry.task_id.empty() || !ids.insert(entry.task_id).second) {
        throw ManifestError("task ids must be non-empty and unique: '" + entry.task_id + "'");
      }
      entry.domain = resolve(base_dir, e.at("domain").get<std::string>(), "domain file");
      entry.task = resolve(base_dir, e.at("task").get<std::string>(), "task file");
      if (e.contains("record")) entry.record = resolve(base_dir, e["record"].get<std::string>(), "record fixture");
      entry.solvable = e.value("solvable", true);
      entry.repetitions = e.value("repetitions", 1);
      if (entry.repetitions < 1) throw ManifestError("entry '" + entry.task_id + "': repetitions must be >= 1");
      if (e.contains("fault")) {
        const auto kind = fault_kind_from_string(e["fault"].at("kind").get<std::string>());
        if (!kind) throw ManifestError("entry '" + entry.task_id + "': unknown fault kind");
        entry.fault = FaultSpec{*kind, e["fault"].value("seed", std::uint64_t{0})};
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string_view to_string(Arm arm) { return arm == Arm::Fast ? "FAST" : "DUPLEX"; }

std::optional<Arm> arm_from_string(std::string_view name) {
  if (name == "FAST" || name == "fast") return Arm::Fast;
  if (name == "DUPLEX" || name == "duplex") return Arm::Duplex;
  return std::nullopt;
}

SuiteResult run_suite(const SuiteManifest& manifest, const PipelineConfig& config, const SuiteOptions& options) {
  config.validate();
  const Prepared p = prepare(manifest, config);
  SuiteResult result;
  result.runs.resize(p.runs.size());
  std::vector<std::exception_ptr> errors(p.runs.size());
  const int threads = options.threads > 0 ? options.threads : omp_get_num_procs();
  const auto n = static_cast<std::int64_t>(p.runs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      result.runs[static_cast<std::size_t>(i)] = execute(p, static_cast<std::size_t>(i), config, options);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.report = aggregate(manifest, p, result.runs, options);
  return result;
}

SuiteResult run_suite_serial(const SuiteManifest& manifest, const PipelineConfig& config,
                             const SuiteOptions& options) {
  config.validate();
  const Prepared p = prepare(manifest, config);
  SuiteResult result;
  for (std::size_t i = 0; i < p.runs.size(); ++i) result.runs.push_back(execute(p, i, config, options));
  result.report = aggregate(manifest, p, result.runs, options);
  return result;
}

namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string pad_right(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string pad_left(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

ordered_json rates_json(const std::map<std::string, RateStats>& m) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : m) out[k] = {{"runs", v.runs}, {"solved", v.solved}, {"sr", v.sr}};
  return out;
}

std::map<std::string, RateStats> rates_from(const json& j) {
  std::map<std::string, RateStats> out;
  for (const auto& [k, v] : j.items()) {
    out[k] = RateStats{v.at("runs").get<int>(), v.at("solved").get<int>(), v.at("sr").get<double>()};
  }
  return out;
}

}  // namespace

std::string emit_report(const SuiteReport& r, ReportFormat format) {
  if (format == ReportFormat::Machine) {
    ordered_json j;
    j["suite"] = r.suite;
    j["arm"] = to_string(r.arm);
    j["runs"] = r.runs;
    j["solved"] = r.solved;
    j["overall_sr"] = r.overall_sr;
    j["domain_average_sr"] = r.domain_average_sr;
    j["domain_average"] = "unweighted mean over domains";
    j["per_domain"] = rates_json(r.per_domain);
    j["per_fault"] = rates_json(r.per_fault);
    j["failure_histogram"] = ordered_json::object();
    for (const auto& [k, v] : r.failure_histogram) j["failure_histogram"][k] = v;
    j["repair_calls"] = {{"clean", r.repair_calls_clean}, {"faulted", r.repair_calls_faulted}};
    j["expectation_mismatches"] = r.expectation_mismatches;
    if (r.timing) j["timing_seconds"] = {{"p50", r.timing->p50}, {"p90", r.timing->p90}, {"max", r.timing->max}};
    return j.dump(2) + "\n";
  }

  std::size_t w = 14;
  for (const auto& [k, v] : r.per_domain) w = std::max(w, k.size() + 2);
  for (const auto& [k, v] : r.per_fault) w = std::max(w, k.size() + 2);
  auto row = [&](const std::string& label, const std::string& runs, const std::string& solved, const std::string& sr) {
    return pad_right(label, w) + pad_left(runs, 6) + pad_left(solved, 8) + pad_left(sr, 8) + "\n";
  };

  std::string out = "Suite " + r.suite + " (" + std::string(to_string(r.arm)) + ", " + std::to_string(r.runs) + " runs)\n\n";
  out += row("Domain", "Runs", "Solved", "SR");
  for (const auto& [k, v] : r.per_domain) out += row(k, std::to_string(v.runs), std::to_string(v.solved), fixed1(v.sr));
  out += row("Average", "", "", fixed1(r.domain_average_sr));
  out += row("Overall", std::to_string(r.runs), std::to_string(r.solved), fixed1(r.overall_sr));
  if (!r.per_fault.empty()) {
    out += "\n" + row("Fault", "Runs", "Solved", "SR");
    for (const auto& [k, v] : r.per_fault) out += row(k, std::to_string(v.runs), std::to_string(v.solved), fixed1(v.sr));
  }
  if (!r.failure_histogram.empty()) {
    out += "\nFailures\n";
    for (const auto& [k, v] : r.failure_histogram) out += "  " + pad_right(k, w) + pad_left(std::to_string(v), 6) + "\n";
  }
  out += "\nRepair calls: " + std::to_string(r.repair_calls_clean) + " on clean tasks, " +
         std::to_string(r.repair_calls_faulted) + " on faulted tasks\n";
  if (r.expectation_mismatches > 0) {
    out += "Outcomes contradicting the solvable flag: " + std::to_string(r.expectation_mismatches) + "\n";
  }
  if (r.timing) {
    out += "Run time (s): p50 " + fixed1(r.timing->p50) + ", p90 " + fixed1(r.timing->p90) + ", max " +
           fixed1(r.timing->max) + "\n";
  }
  out += "Average is the unweighted mean of the per-domain SR.\n";
  return out;
}

SuiteReport parse_suite_report(std::string_view text) {
  const json j = json::parse(text);
  SuiteReport r;
  r.suite = j.at("suite").get<std::string>();
  const auto arm = arm_from_string(j.at("arm").get<std::string>());
  if (!arm) throw std::invalid_argument("unknown arm in report");
  r.arm = *arm;
  r.runs = j.at("runs").get<int>();
  r.solved = j.at("solved").get<int>();
  r.overall_sr = j.at("overall_sr").get<double>();
  r.domain_average_sr = j.at("domain_average_sr").get<double>();
  r.per_domain = rates_from(j.at("per_domain"));
  r.per_fault = rates_from(j.at("per_fault"));
  for (const auto& [k, v] : j.at("failure_histogram").items()) r.failure_histogram[k] = v.get<int>();
  r.repair_calls_clean = j.at("repair_calls").at("clean").get<int>();
  r.repair_calls_faulted = j.at("repair_calls").at("faulted").get<int>();
  r.expectation_mismatches = j.at("expectation_mismatches").get<int>();
  if (j.contains("timing_seconds")) {
    const auto& t = j["timing_seconds"];
    r.timing = TimingSummary{t.at("p50").get<double>(), t.at("p90").get<double>(), t.at("max").get<double>()};
  }
  return r;
}

}  // namespace duplex
