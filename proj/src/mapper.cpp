#include "duplex/mapper.hpp"

namespace duplex {

namespace {

pddl::Atom to_atom(const RelationEntry& rel) { return pddl::Atom{rel.predicate, rel.args}; }

}  // namespace

pddl::ProblemSpec map_to_problem(const ExtractionRecord& record, const pddl::Domain& domain,
                                 const std::string& problem_name) {
  if (!pddl::is_valid_name(problem_name)) throw MapError("invalid problem name '" + problem_name + "'");
  if (!record.missing_keys.empty()) throw MapError("record is missing '" + record.missing_keys.front() + "'");

  pddl::ProblemSpec problem;
  problem.name = problem_name;
  problem.domain_name = domain.name;
  for (const auto& obj : record.objects) {
    if (domain.find_constant(obj.id) != nullptr) continue;
    if (!obj.type) throw MapError("object '" + obj.id + "' has no type");
    problem.objects.push_back(pddl::TypedName{obj.id, *obj.type});
  }
  for (const auto& rel : record.init_relations) problem.init.insert(to_atom(rel));
  std::vector<pddl::Literal> goal;
  for (const auto& rel : record.goal_relations) goal.push_back(pddl::Literal{to_atom(rel), false});
  problem.goal = pddl::canonical_goal(std::move(goal));

  try {
    pddl::check_problem(problem, domain);
  } catch (const pddl::SemanticError& e) {
    throw MapError(std::string("record does not type-check: ") + e.what());
  }
  return problem;
}

std::string map_and_render(const ExtractionRecord& record, const pddl::Domain& domain,
                           const std::string& problem_name) {
  return pddl::render_problem(map_to_problem(record, domain, problem_name));
}

}  // namespace duplex
