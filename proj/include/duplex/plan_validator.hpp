#pragma once

// Stepwise plan simulation under the closed-world assumption.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/pddl.hpp"
#include "duplex/planner.hpp"

namespace duplex::planning {

enum class PlanFailure { UnsatPrecondition, UnknownAction, BadArity, GoalNotReached };
std::string_view to_string(PlanFailure reason);
std::optional<PlanFailure> plan_failure_from_string(std::string_view name);

struct StepFailure {
  /// 1-based index of the offending step; plan length + 1 for GOAL_NOT_REACHED.
  std::size_t step = 0;
  PlanFailure reason = PlanFailure::UnsatPrecondition;
  std::string detail;
  bool operator==(const StepFailure&) const = default;
};

struct ValidationVerdict {
  bool valid = false;
  std::optional<StepFailure> failure;
  /// State after the last successfully applied step.
  std::set<pddl::Atom> final_state;
  bool operator==(const ValidationVerdict&) const = default;
};

/// Grounds only the actions the plan names. Never throws on bad plans.
ValidationVerdict validate_plan(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                const std::vector<PlanStep>& plan);

/// Same, reading one "(action args...)" per line. A line that is not a step
/// fails as UNKNOWN_ACTION at its position.
ValidationVerdict validate_plan_text(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                     std::string_view plan_text);

std::string serialize_verdict(const ValidationVerdict& verdict);
ValidationVerdict parse_verdict(std::string_view text);

}  // namespace duplex::planning
