#pragma once

// Fast pipeline (extract, validate, map, plan, check) and the
// failure-triggered reflection loop around it.

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/extraction.hpp"
#include "duplex/pddl.hpp"
#include "duplex/plan_validator.hpp"
#include "duplex/planner.hpp"
#include "duplex/schema.hpp"
#include "duplex/validation.hpp"

namespace duplex {

/// A parsed domain together with its source text, which repair prompts and
/// the external solver need.
struct DomainInput {
  pddl::Domain domain;
  std::string source;
  ExtractionSchema schema;
  std::string guide;

  static DomainInput from_text(std::string source);
};

enum class Stage { Extract, L1, L2, Map, Planner, Validator };
std::string_view to_string(Stage stage);

enum class FailureClass {
  None,
  ExtractError,    ///< endpoint error, unparseable output, extractor exception
  LlmTimeout,      ///< extractor exceeded the LLM budget
  L1Fail,          ///< Level-1 issue no rule repairs
  L2Fail,
  MapFail,
  GroundFail,
  SearchFail,
  PlannerTimeout,
  PlanParseFail,   ///< external solver output unusable
  PlanInvalid,     ///< plan rejected by the validator
};
std::string_view to_string(FailureClass fc);
std::optional<FailureClass> failure_class_from_string(std::string_view name);

enum class SolverKind { Internal, External };

class RepairAgent;

struct PipelineConfig {
  std::chrono::milliseconds llm_time_budget{60'000};
  std::chrono::milliseconds planner_time_budget{500'000};
  /// 0 disables reflection (the fast-only arm).
  int max_reflection_iters = 3;
  /// Its time_budget is replaced by planner_time_budget.
  planning::SearchConfig search;
  SolverKind solver = SolverKind::Internal;
  planning::ExternalSolverConfig external;
  std::shared_ptr<const Extractor> extractor;
  std::shared_ptr<const RepairAgent> repair_agent;

  /// Throws std::invalid_argument on non-positive budgets or negative iterations.
  void validate() const;
};

/// Everything a repair agent gets to see.
struct Diagnostics {
  Stage source = Stage::L2;
  std::string code;
  std::string detail;
  std::string task_id;
  std::string task_text;
  std::string domain_text;
  ExtractionRecord record;
  /// Rendered problem, when the record got that far.
  std::string problem_pddl;
  std::optional<ValidationReport> validation;
};

class OracleMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RepairAgent {
 public:
  virtual ~RepairAgent() = default;
  virtual ExtractionRecord repair(const Diagnostics& diag) const = 0;
};

/// Scripted stand-in for the repair model: answers with the task's
/// ground-truth record, which undoes any single injected fault. Throws
/// OracleMissing for tasks it has no fixture for.
class OracleRepairAgent : public RepairAgent {
 public:
  OracleRepairAgent() = default;
  explicit OracleRepairAgent(std::map<std::string, ExtractionRecord> truth) : truth_(std::move(truth)) {}
  void add(std::string task_id, ExtractionRecord record) { truth_[std::move(task_id)] = std::move(record); }
  ExtractionRecord repair(const Diagnostics& diag) const override;

 private:
  std::map<std::string, ExtractionRecord> truth_;
};

/// Asks a chat endpoint for a revised record.
class LiveRepairAgent : public RepairAgent {
 public:
  explicit LiveRepairAgent(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  ExtractionRecord repair(const Diagnostics& diag) const override;

  static std::string render_prompt(const Diagnostics& diag);

 private:
  EndpointConfig endpoint_;
};

struct StageOutcome {
  Stage stage = Stage::Extract;
  bool ok = false;
  std::string code;
  std::string detail;
  double seconds = 0.0;
};

struct Attempt {
  std::vector<StageOutcome> stages;
  FailureClass failure = FailureClass::None;
  /// Record as it reached the failing (or last) stage.
  std::optional<ExtractionRecord> record;
  std::optional<Diagnostics> diagnostics;
  std::optional<std::vector<planning::PlanStep>> plan;

  bool solved() const noexcept { return failure == FailureClass::None && plan.has_value(); }
};

struct ReflectionIteration {
  int index = 0;
  Stage trigger = Stage::L2;
  std::string trigger_code;
  std::string trigger_detail;
  double repair_seconds = 0.0;
  /// Set when the agent failed (endpoint error, timeout, missing oracle).
  std::string repair_error;
  std::optional<ExtractionRecord> revised;
  bool stagnated = false;
  std::optional<Attempt> outcome;
};

enum class RunStatus { Solved, Failed };

struct RunRecord {
  std::string task_id;
  Attempt first_pass;
  std::vector<ReflectionIteration> iterations;
  RunStatus status = RunStatus::Failed;
  FailureClass failure = FailureClass::None;
  /// SOLVED, NOT_REPAIRABLE, NO_ITERATIONS, MAX_ITERS or STAGNATION.
  std::string halt_reason;
  std::optional<std::vector<planning::PlanStep>> plan;
  int repair_calls = 0;
  double llm_seconds = 0.0;
  double planner_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Whether a failure in this stage hands control to the repair agent.
bool triggers_reflection(const Attempt& attempt);

RunRecord run_fast(const ExtractionTask& task, const DomainInput& domain, const PipelineConfig& config);
RunRecord run_duplex(const ExtractionTask& task, const DomainInput& domain, const PipelineConfig& config);

/// Runs validation onward on an already parsed record.
Attempt run_from_record(const ExtractionRecord& record, const ExtractionTask& task, const DomainInput& domain,
                        const PipelineConfig& config);

/// Plans a mapped problem with the configured solver.
planning::PlannerOutcome plan_with(const DomainInput& domain, const pddl::ProblemSpec& problem,
                                   const PipelineConfig& config);

std::string serialize_run_record(const RunRecord& record);

}  // namespace duplex
