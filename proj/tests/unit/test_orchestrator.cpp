#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "duplex/orchestrator.hpp"
#include "json.hpp"
#include "support/bfs_oracle.hpp"
#include "support/corpus.hpp"

using namespace duplex;
using duplex::testing::data_path;
using duplex::testing::fixture_path;
using duplex::testing::slurp;

namespace {

using namespace std::chrono_literals;

DomainInput domain_input(const std::string& name) {
  return DomainInput::from_text(slurp(data_path("domains/" + name + ".pddl")));
}

std::string wire(const std::string& fixture) { return slurp(data_path("fixtures/" + fixture + ".json")); }

ExtractionTask task(const std::string& fixture) {
  return {fixture, slurp(data_path("tasks/" + fixture + ".txt"))};
}

PipelineConfig config_for(const std::string& fixture, std::optional<FaultKind> fault = std::nullopt,
                          std::uint64_t seed = 0) {
  PipelineConfig cfg;
  auto scripted = std::make_shared<ScriptedExtractor>();
  scripted->add(fixture, wire(fixture));
  cfg.extractor = scripted;
  if (fault) cfg.extractor = std::make_shared<FaultInjectingExtractor>(scripted, *fault, seed);
  auto oracle = std::make_shared<OracleRepairAgent>();
  oracle->add(fixture, parse_record(wire(fixture)));
  cfg.repair_agent = oracle;
  cfg.llm_time_budget = 5s;
  cfg.planner_time_budget = 10s;
  return cfg;
}

class SleepyExtractor : public Extractor {
 public:
  explicit SleepyExtractor(std::chrono::milliseconds nap) : nap_(nap) {}
  std::string extract(const ExtractionTask&, const std::string&) const override {
    std::this_thread::sleep_for(nap_);
    return wire("listing1");
  }

 private:
  std::chrono::milliseconds nap_;
};

/// Echoes the record it was shown.
class EchoRepair : public RepairAgent {
 public:
  ExtractionRecord repair(const Diagnostics& d) const override {
    ++calls;
    return d.record;
  }
  mutable std::atomic<int> calls{0};
};

/// Always answers with a fresh hallucination, so every answer differs from
/// the last but none is usable.
class WanderingRepair : public RepairAgent {
 public:
  ExtractionRecord repair(const Diagnostics& d) const override {
    ExtractionRecord r = d.record;
    r.init_relations[0].predicate = "wrong-" + std::to_string(++calls);
    return r;
  }
  mutable std::atomic<int> calls{0};
};

class SleepyRepair : public RepairAgent {
 public:
  ExtractionRecord repair(const Diagnostics&) const override {
    std::this_thread::sleep_for(2s);
    return {};
  }
};

double llm_budget_seconds(const PipelineConfig& c) { return std::chrono::duration<double>(c.llm_time_budget).count(); }

}  // namespace

TEST_CASE("listing task is solved by the fast pipeline") {
  const auto d = domain_input("tabletop");
  const auto run = run_fast(task("listing1"), d, config_for("listing1"));
  CHECK(run.status == RunStatus::Solved);
  REQUIRE(run.plan);
  const auto problem = pddl::parse_problem(slurp(data_path("problems/tabletop-listing.pddl")), d.domain);
  const auto oracle = duplex::testing::BfsOracle(d.domain, problem).solve();
  CHECK(static_cast<int>(run.plan->size()) == *oracle.length);
  CHECK(run.plan->front().printable() == "(move apple_01 table_main plate_01)");
  CHECK(run.repair_calls == 0);
  CHECK(run.halt_reason == "SOLVED");
  std::vector<Stage> stages;
  for (const auto& s : run.first_pass.stages) stages.push_back(s.stage);
  CHECK(stages == std::vector<Stage>{Stage::Extract, Stage::L1, Stage::L2, Stage::Map, Stage::Planner, Stage::Validator});
}

TEST_CASE("hallucinated predicate without reflection fails at L2") {
  auto cfg = config_for("listing1", FaultKind::HallucinatePredicate, 1);
  cfg.max_reflection_iters = 0;
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.failure == FailureClass::L2Fail);
  REQUIRE(run.first_pass.diagnostics);
  CHECK(run.first_pass.diagnostics->source == Stage::L2);
  CHECK(run.first_pass.diagnostics->validation->verdict == Verdict::FailL2);
  CHECK(run.repair_calls == 0);
}

TEST_CASE("omitted init fact surfaces as SEARCH_FAIL") {
  const auto run = run_fast(task("bw-sussman"), domain_input("blocksworld"),
                            config_for("bw-sussman", FaultKind::OmitInitFact, 2));
  CHECK(run.failure == FailureClass::SearchFail);
  CHECK(run.first_pass.diagnostics->source == Stage::Planner);
  CHECK(run.first_pass.diagnostics->code == "SEARCH_FAIL");
  CHECK_FALSE(run.first_pass.diagnostics->problem_pddl.empty());
}

TEST_CASE("oracle repair solves a single omission in one iteration") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto run = run_duplex(task("listing1"), domain_input("tabletop"),
                                config_for("listing1", FaultKind::OmitInitFact, seed));
    CHECK(run.status == RunStatus::Solved);
    CHECK(run.iterations.size() == 1);
    CHECK(run.repair_calls == 1);
    CHECK(run.iterations[0].trigger == Stage::Planner);
    CHECK(*run.iterations[0].revised == parse_record(wire("listing1")));
  }
}

TEST_CASE("clean runs leave the repair agent dormant") {
  auto cfg = config_for("kitchen-soup");
  auto echo = std::make_shared<EchoRepair>();
  cfg.repair_agent = echo;
  const auto run = run_duplex(task("kitchen-soup"), domain_input("kitchen"), cfg);
  CHECK(run.status == RunStatus::Solved);
  CHECK(run.iterations.empty());
  CHECK(echo->calls == 0);
}

TEST_CASE("level-1 faults are corrected without repair") {
  for (auto kind : {FaultKind::DropMandatoryKey, FaultKind::StripObjectType, FaultKind::DuplicateObjectId}) {
    auto cfg = config_for("gripper-one", kind, 4);
    auto echo = std::make_shared<EchoRepair>();
    cfg.repair_agent = echo;
    const auto run = run_duplex(task("gripper-one"), domain_input("gripper"), cfg);
    CHECK(run.status == RunStatus::Solved);
    CHECK(run.first_pass.stages[1].code == "CORRECTED");
    CHECK(echo->calls == 0);
  }
}

TEST_CASE("repeating the same record halts as stagnation") {
  auto cfg = config_for("listing1", FaultKind::HallucinateType, 0);
  auto echo = std::make_shared<EchoRepair>();
  cfg.repair_agent = echo;
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.halt_reason == "STAGNATION");
  CHECK(run.iterations.size() == 1);
  CHECK(run.iterations[0].stagnated);
  CHECK(echo->calls == 1);
}

TEST_CASE("a repair agent that never converges uses every iteration") {
  auto cfg = config_for("listing1", FaultKind::HallucinatePredicate, 0);
  auto wandering = std::make_shared<WanderingRepair>();
  cfg.repair_agent = wandering;
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.halt_reason == "MAX_ITERS");
  CHECK(run.failure == FailureClass::L2Fail);
  REQUIRE(run.iterations.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(run.iterations[static_cast<std::size_t>(i)].index == i + 1);
    CHECK(run.iterations[static_cast<std::size_t>(i)].outcome);
  }
  CHECK(run.repair_calls == 3);
}

TEST_CASE("unrepairable level-1 issues reach the repair agent") {
  auto cfg = config_for("bw-sussman");
  auto bad = parse_record(wire("bw-sussman"));
  bad.objects.push_back({bad.objects[0].id, "object"});
  auto scripted = std::make_shared<ScriptedExtractor>();
  scripted->add("bw-sussman", serialize_record(bad));
  cfg.extractor = scripted;
  const auto run = run_duplex(task("bw-sussman"), domain_input("blocksworld"), cfg);
  CHECK(run.first_pass.failure == FailureClass::L1Fail);
  CHECK(run.status == RunStatus::Solved);
  CHECK(run.iterations.size() == 1);
}

TEST_CASE("live repair against an unreachable endpoint") {
  auto cfg = config_for("listing1", FaultKind::OmitGoalFact, 0);
  cfg.extractor = std::make_shared<FaultInjectingExtractor>(cfg.extractor, FaultKind::HallucinateType, 0);
  EndpointConfig ep;
  ep.base_url = "http://127.0.0.1:1/v1";
  ep.timeout = 300ms;
  cfg.repair_agent = std::make_shared<LiveRepairAgent>(ep);
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.repair_calls == 3);
  for (const auto& it : run.iterations) CHECK(it.repair_error.find("failed") != std::string::npos);
}

TEST_CASE("repair prompt carries the diagnostics and artifacts") {
  const auto run = run_fast(task("listing1"), domain_input("tabletop"), config_for("listing1", FaultKind::OmitInitFact, 0));
  const std::string prompt = LiveRepairAgent::render_prompt(*run.first_pass.diagnostics);
  CHECK(prompt.find("SEARCH_FAIL") != std::string::npos);
  CHECK(prompt.find("(define (domain tabletop)") != std::string::npos);
  CHECK(prompt.find(slurp(data_path("tasks/listing1.txt"))) != std::string::npos);
  CHECK(prompt.find("(:init") != std::string::npos);
  CHECK(prompt.find("\"objects\"") != std::string::npos);
}

TEST_CASE("extractor past the LLM budget times out") {
  auto cfg = config_for("listing1");
  cfg.extractor = std::make_shared<SleepyExtractor>(3s);
  cfg.llm_time_budget = 200ms;
  const auto start = std::chrono::steady_clock::now();
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.failure == FailureClass::LlmTimeout);
  CHECK(run.halt_reason == "NOT_REPAIRABLE");
  CHECK(elapsed < 220ms);
}

TEST_CASE("repair past the LLM budget is cut off and counted") {
  auto cfg = config_for("listing1", FaultKind::HallucinateType, 0);
  cfg.repair_agent = std::make_shared<SleepyRepair>();
  cfg.llm_time_budget = 100ms;
  cfg.max_reflection_iters = 2;
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  REQUIRE(run.iterations.size() == 2);
  for (const auto& it : run.iterations) {
    CHECK(it.repair_error.rfind("LLM_TIMEOUT", 0) == 0);
    CHECK(it.repair_seconds < 0.11);
  }
  // Total model time stays within calls x budget.
  CHECK(run.llm_seconds <= (1 + run.repair_calls) * llm_budget_seconds(cfg) * 1.1);
}

TEST_CASE("external solver past the planner budget times out") {
  auto cfg = config_for("bw-sussman");
  cfg.solver = SolverKind::External;
  cfg.external.command_template = fixture_path("solvers/sleeper.sh").string() + " 30";
  cfg.planner_time_budget = 300ms;
  cfg.max_reflection_iters = 0;
  const auto run = run_duplex(task("bw-sussman"), domain_input("blocksworld"), cfg);
  CHECK(run.failure == FailureClass::PlannerTimeout);
  CHECK(run.planner_seconds < 0.33);
}

TEST_CASE("external solver plans go through the validator") {
  auto cfg = config_for("bw-sussman");
  cfg.solver = SolverKind::External;
  cfg.external.command_template = fixture_path("solvers/sussman_plan.sh").string() + " {plan_out}";
  auto run = run_fast(task("bw-sussman"), domain_input("blocksworld"), cfg);
  CHECK(run.status == RunStatus::Solved);
  CHECK(run.plan->size() == 6);

  // The same canned plan is wrong for a different initial state.
  cfg = config_for("bw-reverse3");
  cfg.solver = SolverKind::External;
  cfg.external.command_template = fixture_path("solvers/sussman_plan.sh").string() + " {plan_out}";
  run = run_fast(task("bw-reverse3"), domain_input("blocksworld"), cfg);
  CHECK(run.failure == FailureClass::PlanInvalid);
  CHECK(run.first_pass.diagnostics->source == Stage::Validator);
  CHECK(triggers_reflection(run.first_pass));
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.max_reflection_iters == 3);
  cfg.llm_time_budget = 0ms;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PipelineConfig{};
  cfg.max_reflection_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("missing oracle fixture is reported per iteration") {
  auto cfg = config_for("listing1", FaultKind::OmitInitFact, 0);
  cfg.repair_agent = std::make_shared<OracleRepairAgent>();
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), cfg);
  CHECK(run.status == RunStatus::Failed);
  CHECK(run.iterations.size() == 3);
  CHECK(run.iterations[0].repair_error.find("no ground-truth record") != std::string::npos);
}

TEST_CASE("run records serialize with their transcript") {
  const auto run = run_duplex(task("listing1"), domain_input("tabletop"), config_for("listing1", FaultKind::OmitInitFact, 0));
  const auto j = nlohmann::json::parse(serialize_run_record(run));
  CHECK(j["task_id"] == "listing1");
  CHECK(j["status"] == "SOLVED");
  CHECK(j["first_pass"]["failure"] == "SEARCH_FAIL");
  CHECK(j["iterations"].size() == 1);
  CHECK(j["iterations"][0]["trigger"]["stage"] == "PLANNER");
  CHECK(j["plan"][0] == "(move apple_01 table_main plate_01)");
  for (int i = 0; i <= static_cast<int>(FailureClass::PlanInvalid); ++i) {
    const auto fc = static_cast<FailureClass>(i);
    CHECK(failure_class_from_string(to_string(fc)) == fc);
  }
}
