#include "duplex/plan_validator.hpp"

#include <sstream>

#include "json.hpp"

namespace duplex::planning {

using nlohmann::ordered_json;

std::string_view to_string(PlanFailure reason) {
  switch (reason) {
    case PlanFailure::UnsatPrecondition: return "UNSAT_PRECONDITION";
    case PlanFailure::UnknownAction: return "UNKNOWN_ACTION";
    case PlanFailure::BadArity: return "BAD_ARITY";
    case PlanFailure::GoalNotReached: return "GOAL_NOT_REACHED";
  }
  return "?";
}

std::optional<PlanFailure> plan_failure_from_string(std::string_view name) {
  for (auto r : {PlanFailure::UnsatPrecondition, PlanFailure::UnknownAction, PlanFailure::BadArity,
                 PlanFailure::GoalNotReached}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

namespace {

pddl::Atom bind(const pddl::Atom& atom, const pddl::ActionSchema& schema, const std::vector<std::string>& args) {
  pddl::Atom out = atom;
  for (auto& term : out.args) {
    for (std::size_t p = 0; p < schema.params.size(); ++p) {
      if (schema.params[p].name == term) {
        term = args[p];
        break;
      }
    }
  }
  return out;
}

bool holds(const pddl::Literal& lit, const pddl::Atom& atom, const std::set<pddl::Atom>& state) {
  const bool truth = atom.predicate == pddl::kEqualityPredicate ? atom.args[0] == atom.args[1] : state.contains(atom);
  return truth != lit.negated;
}

/// Applies one step; returns the failure, if any.
std::optional<StepFailure> apply(const pddl::Domain& domain, const pddl::ProblemSpec& problem, const PlanStep& step,
                                 std::size_t index, std::set<pddl::Atom>& state) {
  const pddl::ActionSchema* schema = domain.find_action(step.name);
  if (schema == nullptr) return StepFailure{index, PlanFailure::UnknownAction, step.printable()};
  if (schema->params.size() != step.args.size()) {
    return StepFailure{index, PlanFailure::BadArity,
                       step.printable() + " (expected " + std::to_string(schema->params.size()) + " arguments)"};
  }
  for (std::size_t p = 0; p < step.args.size(); ++p) {
    const std::string* type = pddl::term_type(step.args[p], problem, domain);
    if (type == nullptr || !domain.types.is_subtype(*type, schema->params[p].type)) {
      return StepFailure{index, PlanFailure::UnknownAction,
                         step.printable() + " (no instance binds " + schema->params[p].name + " to '" + step.args[p] +
                             "')"};
    }
  }
  for (const auto& lit : schema->precondition) {
    const pddl::Atom atom = bind(lit.atom, *schema, step.args);
    if (!holds(lit, atom, state)) {
      return StepFailure{index, PlanFailure::UnsatPrecondition, pddl::render_literal({atom, lit.negated})};
    }
  }
  std::vector<pddl::Atom> add;
  for (const auto& e : schema->add) add.push_back(bind(e, *schema, step.args));
  for (const auto& e : schema->del) state.erase(bind(e, *schema, step.args));
  state.insert(add.begin(), add.end());
  return std::nullopt;
}

ValidationVerdict finish(const pddl::ProblemSpec& problem, std::size_t steps, std::set<pddl::Atom> state) {
  ValidationVerdict v;
  for (const auto& lit : problem.goal) {
    if (!holds(lit, lit.atom, state)) {
      v.failure = StepFailure{steps + 1, PlanFailure::GoalNotReached, pddl::render_literal(lit)};
      break;
    }
  }
  v.valid = !v.failure;
  v.final_state = std::move(state);
  return v;
}

}  // namespace

ValidationVerdict validate_plan(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                const std::vector<PlanStep>& plan) {
  std::set<pddl::Atom> state = problem.init;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (auto failure = apply(domain, problem, plan[i], i + 1, state)) {
      return ValidationVerdict{false, std::move(failure), std::move(state)};
    }
  }
  return finish(problem, plan.size(), std::move(state));
}

ValidationVerdict validate_plan_text(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                     std::string_view plan_text) {
  std::set<pddl::Atom> state = problem.init;
  std::istringstream in{std::string(plan_text)};
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') continue;
    ++index;
    std::vector<PlanStep> parsed;
    try {
      parsed = parse_plan(line);
    } catch (const PlanFormatError&) {
    }
    if (parsed.size() != 1) {
      return ValidationVerdict{false, StepFailure{index, PlanFailure::UnknownAction, line.substr(first)},
                               std::move(state)};
    }
    if (auto failure = apply(domain, problem, parsed.front(), index, state)) {
      return ValidationVerdict{false, std::move(failure), std::move(state)};
    }
  }
  return finish(problem, index, std::move(state));
}

std::string serialize_verdict(const ValidationVerdict& verdict) {
  ordered_json j;
  j["valid"] = verdict.valid;
  if (verdict.failure) {
    j["failure"] = {{"step", verdict.failure->step},
                    {"reason", to_string(verdict.failure->reason)},
                    {"detail", verdict.failure->detail}};
  }
  j["final_state"] = ordered_json::array();
  for (const auto& atom : verdict.final_state) j["final_state"].push_back(pddl::render_atom(atom));
  return j.dump(2);
}

ValidationVerdict parse_verdict(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  ValidationVerdict v;
  v.valid = j.at("valid").get<bool>();
  if (j.contains("failure")) {
    const auto& f = j["failure"];
    const auto reason = plan_failure_from_string(f.at("reason").get<std::string>());
    if (!reason) throw std::invalid_argument("unknown plan failure reason");
    v.failure = StepFailure{f.at("step").get<std::size_t>(), *reason, f.at("detail").get<std::string>()};
  }
  for (const auto& s : j.at("final_state")) {
    // "(pred a b)" -> Atom
    const auto steps = parse_plan(s.get<std::string>());
    v.final_state.insert(pddl::Atom{steps.at(0).name, steps.at(0).args});
  }
  return v;
}

}  // namespace duplex::planning
