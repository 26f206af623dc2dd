#pragma once

#include <stdexcept>
#include <string>

#include "duplex/extraction.hpp"
#include "duplex/pddl.hpp"

namespace duplex {

/// The record was not validated: it still has missing types or keys, or does
/// not type-check against the domain.
class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objects in record order (domain constants left out), init atoms and a
/// positive goal conjunction.
pddl::ProblemSpec map_to_problem(const ExtractionRecord& record, const pddl::Domain& domain,
                                 const std::string& problem_name);

/// render_problem(map_to_problem(...)).
std::string map_and_render(const ExtractionRecord& record, const pddl::Domain& domain,
                           const std::string& problem_name);

}  // namespace duplex
