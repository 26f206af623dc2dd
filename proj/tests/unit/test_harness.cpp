#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "duplex/harness.hpp"
#include "json.hpp"
#include "support/corpus.hpp"

using namespace duplex;
using duplex::testing::data_path;
using duplex::testing::slurp;

namespace {

SuiteManifest suite(const std::string& name) { return SuiteManifest::load(data_path("suites/" + name + ".json")); }

PipelineConfig quick_config() {
  PipelineConfig cfg;
  cfg.llm_time_budget = std::chrono::seconds(10);
  cfg.planner_time_budget = std::chrono::seconds(10);
  return cfg;
}

SuiteOptions arm(Arm a) {
  SuiteOptions o;
  o.arm = a;
  return o;
}

std::string manifest_text(const std::string& entries) {
  return R"({"suite":"t","entries":[)" + entries + "]}";
}

const char* kEntry = R"({"task_id":"a","domain":"domains/tabletop.pddl","task":"tasks/listing1.txt",
                         "record":"fixtures/listing1.json","repetitions":REPS})";

std::string entry_with(const std::string& reps) {
  std::string e = kEntry;
  e.replace(e.find("REPS"), 4, reps);
  return e;
}

}  // namespace

TEST_CASE("bundled manifests load with resolved paths") {
  for (const char* name : {"clean4", "l3-mix", "ablation"}) {
    const auto m = suite(name);
    CHECK(m.name == name);
    for (const auto& e : m.entries) {
      CHECK(std::filesystem::is_regular_file(e.domain));
      CHECK(std::filesystem::is_regular_file(e.task));
      CHECK(e.record);
      CHECK(e.repetitions >= 1);
    }
  }
  const auto ab = suite("ablation");
  CHECK(ab.entries.size() == 40);
  CHECK(std::count_if(ab.entries.begin(), ab.entries.end(), [](const SuiteEntry& e) { return e.fault.has_value(); }) == 20);
}

TEST_CASE("manifest errors") {
  const auto base = data_path("");
  CHECK_NOTHROW(SuiteManifest::parse(manifest_text(entry_with("2")), base));
  CHECK_THROWS_AS(SuiteManifest::parse(manifest_text(entry_with("0")), base), ManifestError);
  CHECK_THROWS_AS(SuiteManifest::parse(manifest_text(entry_with("1") + "," + entry_with("1")), base), ManifestError);
  CHECK_THROWS_AS(SuiteManifest::parse("{", base), ManifestError);
  CHECK_THROWS_AS(SuiteManifest::parse(R"({"entries":[]})", base), ManifestError);
  CHECK_THROWS_AS(SuiteManifest::parse(manifest_text(R"({"task_id":"a","domain":"nope.pddl","task":"tasks/listing1.txt"})"), base),
                  ManifestError);
  CHECK_THROWS_AS(SuiteManifest::parse(manifest_text(R"({"task_id":"a","domain":"domains/tabletop.pddl",
      "task":"tasks/listing1.txt","fault":{"kind":"SOMETHING"}})"), base),
                  ManifestError);
  CHECK_THROWS_AS(SuiteManifest::load(data_path("suites/missing.json")), ManifestError);

  // No record and no configured extractor: nothing can produce the record.
  const auto m = SuiteManifest::parse(
      manifest_text(R"({"task_id":"a","domain":"domains/tabletop.pddl","task":"tasks/listing1.txt"})"), base);
  CHECK_THROWS_AS(run_suite(m, quick_config(), arm(Arm::Fast)), ManifestError);
}

TEST_CASE("clean suite, fast arm") {
  const auto r = run_suite(suite("clean4"), quick_config(), arm(Arm::Fast)).report;
  CHECK(r.runs == 4);
  CHECK(r.overall_sr == 100.0);
  CHECK(r.failure_histogram.empty());
  CHECK(r.repair_calls_clean == 0);
}

TEST_CASE("four omissions in ten entries") {
  const auto m = suite("l3-mix");
  const auto fast = run_suite(m, quick_config(), arm(Arm::Fast)).report;
  CHECK(fast.overall_sr == 60.0);
  CHECK(fast.failure_histogram == std::map<std::string, int>{{"SEARCH_FAIL", 4}});
  const auto duplex = run_suite(m, quick_config(), arm(Arm::Duplex)).report;
  CHECK(duplex.overall_sr == 100.0);
  CHECK(duplex.repair_calls_faulted == 4);
  CHECK(duplex.repair_calls_clean == 0);
}

TEST_CASE("success rates match an independent count") {
  const auto m = suite("ablation");
  for (auto a : {Arm::Fast, Arm::Duplex}) {
    const auto result = run_suite(m, quick_config(), arm(a));
    REQUIRE(result.runs.size() == 40);
    int solved = 0;
    std::map<std::string, std::pair<int, int>> by_fault;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      const bool ok = result.runs[i].status == RunStatus::Solved;
      solved += ok;
      if (m.entries[i].fault) {
        auto& [runs, good] = by_fault[std::string(to_string(m.entries[i].fault->kind))];
        ++runs;
        good += ok;
      }
    }
    const auto& r = result.report;
    CHECK(r.solved == solved);
    CHECK(r.overall_sr == doctest::Approx(100.0 * solved / 40));
    int hist = 0;
    for (const auto& [k, v] : r.failure_histogram) hist += v;
    CHECK(hist == r.runs - r.solved);
    for (const auto& [kind, counts] : by_fault) {
      CHECK(r.per_fault.at(kind).runs == counts.first);
      CHECK(r.per_fault.at(kind).solved == counts.second);
    }
    double sum = 0;
    for (const auto& [d, s] : r.per_domain) sum += 100.0 * s.solved / s.runs;
    CHECK(r.domain_average_sr == doctest::Approx(sum / static_cast<double>(r.per_domain.size())));
  }
}

TEST_CASE("duplex never does worse than fast, per fault kind") {
  const auto m = suite("ablation");
  const auto fast = run_suite(m, quick_config(), arm(Arm::Fast)).report;
  const auto full = run_suite(m, quick_config(), arm(Arm::Duplex)).report;
  CHECK(full.overall_sr >= fast.overall_sr);
  for (const auto& [kind, stats] : fast.per_fault) CHECK(full.per_fault.at(kind).sr >= stats.sr);
}

TEST_CASE("parallel and serial runners agree") {
  const auto m = suite("ablation");
  for (auto a : {Arm::Fast, Arm::Duplex}) {
    auto opts = arm(a);
    opts.threads = 4;
    const auto par = run_suite(m, quick_config(), opts);
    const auto ser = run_suite_serial(m, quick_config(), opts);
    CHECK(par.report == ser.report);
    CHECK(emit_report(par.report, ReportFormat::Machine) == emit_report(ser.report, ReportFormat::Machine));
    for (std::size_t i = 0; i < par.runs.size(); ++i) {
      CHECK(par.runs[i].task_id == ser.runs[i].task_id);
      CHECK(par.runs[i].plan == ser.runs[i].plan);
    }
  }
}

TEST_CASE("repetitions vary the fault seed") {
  const auto m = SuiteManifest::parse(
      manifest_text(R"({"task_id":"b","domain":"domains/blocksworld.pddl","task":"tasks/bw-reverse3.txt",
        "record":"fixtures/bw-reverse3.json","repetitions":6,"fault":{"kind":"OMIT_INIT_FACT","seed":0}})"),
      data_path(""));
  auto opts = arm(Arm::Duplex);
  const auto result = run_suite(m, quick_config(), opts);
  CHECK(result.report.runs == 6);
  std::set<std::string> omitted;
  for (const auto& run : result.runs) omitted.insert(serialize_record(*run.first_pass.record));
  CHECK(omitted.size() > 1);

  opts.base_seed = 1;
  const auto shifted = run_suite(m, quick_config(), opts);
  CHECK(serialize_record(*shifted.runs[0].first_pass.record) == serialize_record(*result.runs[1].first_pass.record));
}

TEST_CASE("table layout") {
  SuiteReport r;
  r.suite = "demo";
  r.runs = 10;
  r.solved = 10;
  r.overall_sr = 100.0;
  r.domain_average_sr = 100.0;
  r.per_domain["blocksworld"] = {10, 10, 100.0};
  const std::string table = emit_report(r, ReportFormat::Table);
  CHECK(table.find("blocksworld") != std::string::npos);
  CHECK(table.find("Average") != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
  CHECK(table.find("unweighted mean") != std::string::npos);

  r.runs = 15;
  r.solved = 13;
  r.per_domain["gripper"] = {5, 3, 60.0};
  r.domain_average_sr = 80.0;
  r.overall_sr = 100.0 * 13 / 15;
  const std::string two = emit_report(r, ReportFormat::Table);
  std::string avg_line;
  std::istringstream in(two);
  for (std::string line; std::getline(in, line);) {
    if (avg_line.empty() && line.rfind("Average", 0) == 0) avg_line = line;
  }
  CHECK(avg_line.find("80.0") != std::string::npos);
}

TEST_CASE("machine format round-trips") {
  auto opts = arm(Arm::Duplex);
  auto r = run_suite(suite("ablation"), quick_config(), opts).report;
  CHECK(parse_suite_report(emit_report(r, ReportFormat::Machine)) == r);
  CHECK_FALSE(r.timing.has_value());
  opts.include_timing = true;
  r = run_suite(suite("clean4"), quick_config(), opts).report;
  REQUIRE(r.timing);
  CHECK(r.timing->p50 <= r.timing->p90);
  CHECK(r.timing->p90 <= r.timing->max);
  CHECK(parse_suite_report(emit_report(r, ReportFormat::Machine)) == r);
}
