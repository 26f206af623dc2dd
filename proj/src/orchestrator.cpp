#include "duplex/orchestrator.hpp"

#include <unistd.h>

#include <exception>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include "duplex/mapper.hpp"

namespace duplex {

namespace {

using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class T>
struct Boxed {
  std::optional<T> value;
  std::exception_ptr error;
  bool timed_out = false;
  double seconds = 0.0;
};

/// Runs `fn` on a detached thread and stops waiting after `budget`. The
/// callable must own everything it touches, since it may outlive the caller.
template <class F>
auto call_with_budget(F fn, std::chrono::milliseconds budget) -> Boxed<decltype(fn())> {
  using T = decltype(fn());
  const auto start = Clock::now();
  auto promise = std::make_shared<std::promise<T>>();
  auto future = promise->get_future();
  std::thread([promise, fn = std::move(fn)]() mutable {
    try {
      promise->set_value(fn());
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();

  Boxed<T> out;
  if (future.wait_for(budget) != std::future_status::ready) {
    out.timed_out = true;
  } else {
    try {
      out.value = future.get();
    } catch (...) {
      out.error = std::current_exception();
    }
  }
  out.seconds = seconds_since(start);
  return out;
}

std::string what(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

std::string problem_name_for(const ExtractionTask& task) {
  std::string name = normalize_identifier(task.id);
  return pddl::is_valid_name(name) ? name : "task";
}

FailureClass planner_failure(planning::DiagnosticCode code) {
  switch (code) {
    case planning::DiagnosticCode::ParseFail: return FailureClass::PlanParseFail;
    case planning::DiagnosticCode::GroundFail: return FailureClass::GroundFail;
    case planning::DiagnosticCode::SearchFail: return FailureClass::SearchFail;
    case planning::DiagnosticCode::Timeout: return FailureClass::PlannerTimeout;
  }
  return FailureClass::SearchFail;
}

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("duplex-run-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  fs::path path_;
};

void accumulate(RunRecord& run, const Attempt& attempt) {
  for (const auto& s : attempt.stages) {
    if (s.stage == Stage::Planner) run.planner_seconds += s.seconds;
    if (s.stage == Stage::Extract) run.llm_seconds += s.seconds;
  }
}

}  // namespace

DomainInput DomainInput::from_text(std::string source) {
  DomainInput d;
  d.domain = pddl::parse_domain(source);
  d.source = std::move(source);
  d.schema = derive_schema(d.domain);
  d.guide = render_schema_guide(d.schema);
  return d;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Extract: return "EXTRACT";
    case Stage::L1: return "L1";
    case Stage::L2: return "L2";
    case Stage::Map: return "MAP";
    case Stage::Planner: return "PLANNER";
    case Stage::Validator: return "VALIDATOR";
  }
  return "?";
}

std::string_view to_string(FailureClass fc) {
  switch (fc) {
    case FailureClass::None: return "NONE";
    case FailureClass::ExtractError: return "EXTRACT_ERROR";
    case FailureClass::LlmTimeout: return "LLM_TIMEOUT";
    case FailureClass::L1Fail: return "L1_FAIL";
    case FailureClass::L2Fail: return "L2_FAIL";
    case FailureClass::MapFail: return "MAP_FAIL";
    case FailureClass::GroundFail: return "GROUND_FAIL";
    case FailureClass::SearchFail: return "SEARCH_FAIL";
    case FailureClass::PlannerTimeout: return "PLANNER_TIMEOUT";
    case FailureClass::PlanParseFail: return "PLAN_PARSE_FAIL";
    case FailureClass::PlanInvalid: return "PLAN_INVALID";
  }
  return "?";
}

std::optional<FailureClass> failure_class_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(FailureClass::PlanInvalid); ++i) {
    const auto fc = static_cast<FailureClass>(i);
    if (to_string(fc) == name) return fc;
  }
  return std::nullopt;
}

void PipelineConfig::validate() const {
  if (llm_time_budget.count() <= 0) throw std::invalid_argument("LLM time budget must be positive");
  if (planner_time_budget.count() <= 0) throw std::invalid_argument("planner time budget must be positive");
  if (max_reflection_iters < 0) throw std::invalid_argument("max reflection iterations must be >= 0");
  search.validate();
}

bool triggers_reflection(const Attempt& attempt) {
  switch (attempt.failure) {
    case FailureClass::None:
    case FailureClass::ExtractError:
    case FailureClass::LlmTimeout:
      return false;
    default:
      return attempt.diagnostics.has_value();
  }
}

planning::PlannerOutcome plan_with(const DomainInput& domain, const pddl::ProblemSpec& problem,
                                   const PipelineConfig& config) {
  if (config.solver == SolverKind::Internal) {
    planning::SearchConfig search = config.search;
    search.time_budget = config.planner_time_budget;
    return planning::plan_problem(domain.domain, problem, search);
  }
  ScratchDir scratch;
  const auto domain_path = scratch.write("domain.pddl", domain.source);
  const auto problem_path = scratch.write("problem.pddl", pddl::render_problem(problem));
  return planning::solve_external(domain_path, problem_path, config.external, config.planner_time_budget);
}

Attempt run_from_record(const ExtractionRecord& record, const ExtractionTask& task, const DomainInput& domain,
                        const PipelineConfig& config) {
  Attempt at;
  ExtractionRecord current = record;
  std::optional<ValidationReport> last_report;

  auto fail = [&](Stage stage, FailureClass fc, std::string code, std::string detail, std::string problem_pddl = {}) {
    at.failure = fc;
    at.record = current;
    Diagnostics d;
    d.source = stage;
    d.code = std::move(code);
    d.detail = std::move(detail);
    d.task_id = task.id;
    d.task_text = task.text;
    d.domain_text = domain.source;
    d.record = current;
    d.problem_pddl = std::move(problem_pddl);
    d.validation = last_report;
    at.diagnostics = std::move(d);
    return at;
  };
  auto summary = [](const ValidationReport& r) {
    std::string s;
    for (const auto& issue : r.issues) {
      if (issue.auto_corrected) continue;
      if (!s.empty()) s += "; ";
      s += std::string(to_string(issue.kind)) + " at " + issue.location + ": " + issue.detail;
    }
    return s;
  };

  // Level 1
  auto t = Clock::now();
  ValidationReport l1 = validate_level1(current, domain.schema);
  at.stages.push_back({Stage::L1, l1.verdict != Verdict::FailL1, std::string(to_string(l1.verdict)), summary(l1),
                       seconds_since(t)});
  if (l1.corrected_record) current = *l1.corrected_record;
  last_report = l1;
  if (l1.verdict == Verdict::FailL1) {
    return fail(Stage::L1, FailureClass::L1Fail, "FAIL_L1", at.stages.back().detail);
  }

  // Level 2
  t = Clock::now();
  ValidationReport l2 = validate_level2(current, domain.schema);
  at.stages.push_back({Stage::L2, l2.passed(), std::string(to_string(l2.verdict)), summary(l2), seconds_since(t)});
  if (!l2.passed()) {
    last_report = l2;
    return fail(Stage::L2, FailureClass::L2Fail, "FAIL_L2", at.stages.back().detail);
  }

  // Map
  t = Clock::now();
  pddl::ProblemSpec problem;
  std::string problem_pddl;
  try {
    problem = map_to_problem(current, domain.domain, problem_name_for(task));
    problem_pddl = pddl::render_problem(problem);
    at.stages.push_back({Stage::Map, true, "OK", "", seconds_since(t)});
  } catch (const std::exception& e) {
    at.stages.push_back({Stage::Map, false, "MAP_ERROR", e.what(), seconds_since(t)});
    return fail(Stage::Map, FailureClass::MapFail, "MAP_ERROR", e.what());
  }

  // Plan
  t = Clock::now();
  planning::PlannerOutcome outcome;
  try {
    outcome = plan_with(domain, problem, config);
  } catch (const std::exception& e) {
    outcome = planning::PlannerDiagnostic{planning::DiagnosticCode::ParseFail, e.what(), {}};
  }
  const double plan_seconds = seconds_since(t);
  if (const auto* diag = planning::diagnostic_of(outcome)) {
    at.stages.push_back({Stage::Planner, false, std::string(planning::to_string(diag->code)), diag->detail,
                         plan_seconds});
    return fail(Stage::Planner, planner_failure(diag->code), std::string(planning::to_string(diag->code)),
                diag->detail, problem_pddl);
  }
  const auto& plan = *planning::plan_of(outcome);
  at.stages.push_back({Stage::Planner, true, "OK", std::to_string(plan.steps.size()) + " steps", plan_seconds});

  // Check the plan independently of whoever produced it.
  t = Clock::now();
  const auto verdict = planning::validate_plan(domain.domain, problem, plan.steps);
  if (!verdict.valid) {
    const std::string code(planning::to_string(verdict.failure->reason));
    const std::string detail = "step " + std::to_string(verdict.failure->step) + ": " + verdict.failure->detail;
    at.stages.push_back({Stage::Validator, false, code, detail, seconds_since(t)});
    return fail(Stage::Validator, FailureClass::PlanInvalid, code, detail, problem_pddl);
  }
  at.stages.push_back({Stage::Validator, true, "VALID", "", seconds_since(t)});
  at.record = current;
  at.plan = plan.steps;
  return at;
}

RunRecord run_fast(const ExtractionTask& task, const DomainInput& domain, const PipelineConfig& config) {
  const auto start = Clock::now();
  RunRecord run;
  run.task_id = task.id;
  Attempt& at = run.first_pass;

  if (!config.extractor) {
    at.stages.push_back({Stage::Extract, false, "NO_EXTRACTOR", "no extractor configured", 0.0});
    at.failure = FailureClass::ExtractError;
  } else {
    auto boxed = call_with_budget(
        [extractor = config.extractor, task, guide = domain.guide]() { return extractor->extract(task, guide); },
        config.llm_time_budget);
    if (boxed.timed_out) {
      at.stages.push_back({Stage::Extract, false, "LLM_TIMEOUT", "extractor exceeded the LLM time budget",
                           boxed.seconds});
      at.failure = FailureClass::LlmTimeout;
    } else if (boxed.error) {
      at.stages.push_back({Stage::Extract, false, "EXTRACT_ERROR", what(boxed.error), boxed.seconds});
      at.failure = FailureClass::ExtractError;
    } else {
      try {
        ExtractionRecord record = parse_record(*boxed.value);
        at.stages.push_back({Stage::Extract, true, "OK", "", boxed.seconds});
        Attempt rest = run_from_record(record, task, domain, config);
        rest.stages.insert(rest.stages.begin(), at.stages.begin(), at.stages.end());
        at = std::move(rest);
      } catch (const std::exception& e) {
        at.stages.push_back({Stage::Extract, false, "WIRE_ERROR", e.what(), boxed.seconds});
        at.failure = FailureClass::ExtractError;
      }
    }
  }

  accumulate(run, at);
  run.failure = at.failure;
  if (at.solved()) {
    run.status = RunStatus::Solved;
    run.plan = at.plan;
    run.halt_reason = "SOLVED";
  } else {
    run.halt_reason = triggers_reflection(at) ? "NO_ITERATIONS" : "NOT_REPAIRABLE";
  }
  run.total_seconds = seconds_since(start);
  return run;
}

RunRecord run_duplex(const ExtractionTask& task, const DomainInput& domain, const PipelineConfig& config) {
  const auto start = Clock::now();
  RunRecord run = run_fast(task, domain, config);
  if (run.status == RunStatus::Solved || !triggers_reflection(run.first_pass)) return run;
  if (config.max_reflection_iters == 0 || !config.repair_agent) {
    run.halt_reason = "NO_ITERATIONS";
    return run;
  }

  const Attempt* failing = &run.first_pass;
  Diagnostics diag = *failing->diagnostics;
  run.halt_reason = "MAX_ITERS";
  for (int i = 1; i <= config.max_reflection_iters; ++i) {
    ReflectionIteration it;
    it.index = i;
    it.trigger = diag.source;
    it.trigger_code = diag.code;
    it.trigger_detail = diag.detail;
    ++run.repair_calls;
    auto boxed = call_with_budget([agent = config.repair_agent, diag]() { return agent->repair(diag); },
                                  config.llm_time_budget);
    it.repair_seconds = boxed.seconds;
    run.llm_seconds += boxed.seconds;
    if (boxed.timed_out) {
      it.repair_error = "LLM_TIMEOUT: repair exceeded the LLM time budget";
    } else if (boxed.error) {
      it.repair_error = what(boxed.error);
    }
    if (!it.repair_error.empty()) {
      run.iterations.push_back(std::move(it));
      continue;
    }

    it.revised = *boxed.value;
    if (*it.revised == diag.record) {
      it.stagnated = true;
      run.iterations.push_back(std::move(it));
      run.halt_reason = "STAGNATION";
      break;
    }
    it.outcome = run_from_record(*it.revised, task, domain, config);
    accumulate(run, *it.outcome);
    run.failure = it.outcome->failure;
    const bool solved = it.outcome->solved();
    if (solved) {
      run.status = RunStatus::Solved;
      run.plan = it.outcome->plan;
      run.halt_reason = "SOLVED";
    } else {
      diag = *it.outcome->diagnostics;
    }
    run.iterations.push_back(std::move(it));
    if (solved) break;
  }
  run.total_seconds = seconds_since(start);
  return run;
}

ExtractionRecord OracleRepairAgent::repair(const Diagnostics& diag) const {
  auto it = truth_.find(diag.task_id);
  if (it == truth_.end()) throw OracleMissing("no ground-truth record for task '" + diag.task_id + "'");
  return it->second;
}

std::string LiveRepairAgent::render_prompt(const Diagnostics& diag) {
  std::string p;
  p += "The planning pipeline failed at stage " + std::string(to_string(diag.source)) + " with " + diag.code + ".\n";
  if (!diag.detail.empty()) p += "Detail: " + diag.detail + "\n";
  if (diag.validation) {
    p += "\nValidation issues:\n";
    for (const auto& issue : diag.validation->issues) {
      p += "- L" + std::to_string(issue.level) + " " + std::string(to_string(issue.kind)) + " at " + issue.location +
           ": " + issue.detail + (issue.auto_corrected ? " (auto-corrected)" : "") + "\n";
    }
  }
  p += "\nDomain:\n" + diag.domain_text + "\n";
  p += "\nTask description:\n" + diag.task_text + "\n";
  p += "\nCurrent extraction record:\n```json\n" + serialize_record(diag.record) + "\n```\n";
  if (!diag.problem_pddl.empty()) p += "\nProblem it maps to:\n" + diag.problem_pddl + "\n";
  p += "\nFind the root cause and reply with the corrected record as one JSON block in the same format.\n";
  return p;
}

ExtractionRecord LiveRepairAgent::repair(const Diagnostics& diag) const {
  static const std::string kSystem =
      "You repair object/relation extraction records for a PDDL planner. Use only the domain's types, "
      "predicates and constants. Answer with a single ```json block.";
  return parse_record(first_fenced_block(chat_complete(endpoint_, kSystem, render_prompt(diag))));
}

}  // namespace duplex
