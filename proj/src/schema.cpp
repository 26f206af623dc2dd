#include "duplex/schema.hpp"

#include <algorithm>
#include <sstream>

namespace duplex {

const pddl::PredicateSig* ExtractionSchema::find_predicate(std::string_view name) const {
  auto it = std::find_if(predicates.begin(), predicates.end(),
                         [&](const pddl::PredicateSig& p) { return p.name == name; });
  return it == predicates.end() ? nullptr : &*it;
}

const pddl::TypedName* ExtractionSchema::find_constant(std::string_view name) const {
  auto it = std::find_if(constants.begin(), constants.end(),
                         [&](const pddl::TypedName& c) { return c.name == name; });
  return it == constants.end() ? nullptr : &*it;
}

ExtractionSchema derive_schema(const pddl::Domain& domain) {
  return ExtractionSchema{domain.name, domain.types, domain.predicates, domain.constants};
}

std::string render_schema_guide(const ExtractionSchema& schema) {
  std::ostringstream out;
  out << "You are an information extractor for the planning domain '" << schema.domain_name
      << "'.\n"
         "Read the task description and report the objects it mentions, the facts that\n"
         "hold now, and the facts that must hold when the task is done. Do not plan.\n\n";

  out << "Types (name: parent):\n";
  for (const auto& t : schema.types.names()) {
    if (t == pddl::kRootType) continue;
    out << "  " << t << ": " << schema.types.parent(t) << "\n";
  }
  if (schema.types.size() == 1) out << "  (untyped: every object has type object)\n";

  out << "\nPredicates (one per line, argument slots with their types):\n";
  for (const auto& p : schema.predicates) {
    out << "  " << p.name << "(";
    for (std::size_t i = 0; i < p.params.size(); ++i) {
      if (i > 0) out << ", ";
      out << p.params[i].type;
    }
    out << ")\n";
  }

  if (!schema.constants.empty()) {
    out << "\nConstants (always present; use them as arguments, never declare them as objects):\n";
    for (const auto& c : schema.constants) out << "  " << c.name << ": " << c.type << "\n";
  }

  out << "\nOutput exactly one JSON document with these keys and nothing else:\n"
         "{\n"
         "  \"objects\": [{\"id\": \"<name>\", \"type\": \"<type>\"}],\n"
         "  \"relations\": {\n"
         "    \"init\": [{\"predicate\": \"<predicate>\", \"args\": [\"<id>\", ...]}],\n"
         "    \"goal\": [{\"predicate\": \"<predicate>\", \"args\": [\"<id>\", ...]}]\n"
         "  }\n"
         "}\n"
         "A binary relation may instead be written {\"subject\": \"<id>\", \"predicate\": "
         "\"<predicate>\", \"object\": \"<id>\"}.\n"
         "Use only the types and predicates listed above. Every argument must be a declared "
         "object id";
  if (!schema.constants.empty()) out << " or a constant";
  out << ".\n"
         "Include implicit facts a person would take for granted (e.g. a closed door, a free hand).\n";
  return out.str();
}

}  // namespace duplex
