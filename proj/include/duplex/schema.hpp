#pragma once

#include <string>
#include <vector>

#include "duplex/pddl.hpp"

namespace duplex {

/// The vocabulary an extractor may use: exactly the types, predicate
/// signatures and constants of one domain.
struct ExtractionSchema {
  std::string domain_name;
  pddl::TypeTree types;
  std::vector<pddl::PredicateSig> predicates;
  std::vector<pddl::TypedName> constants;

  const pddl::PredicateSig* find_predicate(std::string_view name) const;
  const pddl::TypedName* find_constant(std::string_view name) const;
  bool operator==(const ExtractionSchema&) const = default;
};

ExtractionSchema derive_schema(const pddl::Domain& domain);

/// Deterministic extractor guidance: vocabulary listing plus the required
/// output document shape.
std::string render_schema_guide(const ExtractionSchema& schema);

}  // namespace duplex
