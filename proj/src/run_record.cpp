#include "duplex/orchestrator.hpp"
#include "json.hpp"

namespace duplex {

namespace {

using nlohmann::ordered_json;

ordered_json steps_json(const std::vector<planning::PlanStep>& steps) {
  ordered_json out = ordered_json::array();
  for (const auto& s : steps) out.push_back(s.printable());
  return out;
}

ordered_json attempt_json(const Attempt& at) {
  ordered_json j;
  j["stages"] = ordered_json::array();
  for (const auto& s : at.stages) {
    ordered_json st{{"stage", to_string(s.stage)}, {"ok", s.ok}, {"code", s.code}};
    if (!s.detail.empty()) st["detail"] = s.detail;
    st["seconds"] = s.seconds;
    j["stages"].push_back(std::move(st));
  }
  j["failure"] = to_string(at.failure);
  if (at.record) j["record"] = ordered_json::parse(serialize_record(*at.record));
  if (at.plan) j["plan"] = steps_json(*at.plan);
  return j;
}

}  // namespace

std::string serialize_run_record(const RunRecord& run) {
  ordered_json j;
  j["task_id"] = run.task_id;
  j["status"] = run.status == RunStatus::Solved ? "SOLVED" : "FAILED";
  j["failure"] = to_string(run.failure);
  j["halt_reason"] = run.halt_reason;
  j["repair_calls"] = run.repair_calls;
  j["first_pass"] = attempt_json(run.first_pass);
  j["iterations"] = ordered_json::array();
  for (const auto& it : run.iterations) {
    ordered_json ij{{"index", it.index},
                    {"trigger", {{"stage", to_string(it.trigger)}, {"code", it.trigger_code}, {"detail", it.trigger_detail}}},
                    {"repair_seconds", it.repair_seconds}};
    if (!it.repair_error.empty()) ij["repair_error"] = it.repair_error;
    if (it.revised) ij["revised"] = ordered_json::parse(serialize_record(*it.revised));
    if (it.stagnated) ij["stagnated"] = true;
    if (it.outcome) ij["outcome"] = attempt_json(*it.outcome);
    j["iterations"].push_back(std::move(ij));
  }
  if (run.plan) j["plan"] = steps_json(*run.plan);
  j["timing"] = {{"llm_seconds", run.llm_seconds},
                 {"planner_seconds", run.planner_seconds},
                 {"total_seconds", run.total_seconds}};
  return j.dump(2);
}

}  // namespace duplex
