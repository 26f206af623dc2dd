#include <algorithm>
#include <sstream>

#include "duplex/pddl.hpp"

namespace duplex::pddl {

std::string render_atom(const Atom& atom) {
  std::string out = "(" + atom.predicate;
  for (const auto& a : atom.args) {
    out += ' ';
    out += a;
  }
  out += ')';
  return out;
}

std::string render_literal(const Literal& literal) {
  return literal.negated ? "(not " + render_atom(literal.atom) + ")" : render_atom(literal.atom);
}

std::string render_problem(const ProblemSpec& problem) {
  std::ostringstream out;
  out << "(define (problem " << problem.name << ")\n";
  out << "  (:domain " << problem.domain_name << ")\n";
  out << "  (:objects\n";
  for (const auto& obj : problem.objects) out << "    " << obj.name << " - " << obj.type << "\n";
  out << "  )\n";

  // Atom ordering is lexicographic on (predicate, args), which coincides with
  // the byte order of the rendered text for valid names.
  out << "  (:init\n";
  for (const auto& atom : problem.init) out << "    " << render_atom(atom) << "\n";
  out << "  )\n";

  std::vector<Literal> goal = canonical_goal(problem.goal);
  out << "  (:goal\n    (and\n";
  for (const auto& lit : goal) out << "      " << render_literal(lit) << "\n";
  out << "    )\n  )\n";
  out << ")\n";
  return out.str();
}

}  // namespace duplex::pddl
