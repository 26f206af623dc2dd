#pragma once

// Record validation. Level 1 is structural and repairs what a rule can
// repair; Level 2 checks the vocabulary against the extraction schema.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/extraction.hpp"
#include "duplex/schema.hpp"

namespace duplex {

enum class IssueKind {
  // Level 1
  MissingKey,
  MissingType,
  DuplicateId,
  ArityMismatch,
  MalformedIdentifier,
  // Level 2
  UnknownPredicate,
  UnknownType,
  UndeclaredObject,
  TypeMismatch,
};

int issue_level(IssueKind kind);
std::string_view to_string(IssueKind kind);
std::optional<IssueKind> issue_kind_from_string(std::string_view name);

struct ValidationIssue {
  int level = 1;
  IssueKind kind = IssueKind::MissingKey;
  /// Record path such as "objects[2].type" or "relations.init[0].args[1]".
  std::string location;
  std::string detail;
  bool auto_corrected = false;
  bool operator==(const ValidationIssue&) const = default;
};

enum class Verdict {
  Pass,       ///< no issues
  Corrected,  ///< Level-1 issues found, all repaired
  FailL1,     ///< a Level-1 issue no rule can repair
  FailL2,     ///< a vocabulary violation
};

std::string_view to_string(Verdict verdict);
std::optional<Verdict> verdict_from_string(std::string_view name);

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  /// Present whenever Level 1 changed the record.
  std::optional<ExtractionRecord> corrected_record;
  Verdict verdict = Verdict::Pass;

  bool passed() const noexcept { return verdict == Verdict::Pass || verdict == Verdict::Corrected; }
  bool operator==(const ValidationReport&) const = default;
};

/// Lower-cases and replaces characters outside [a-z0-9_-]; empty when the
/// input has nothing usable.
std::string normalize_identifier(std::string_view raw);

ValidationReport validate_level1(const ExtractionRecord& record, const ExtractionSchema& schema);
ValidationReport validate_level2(const ExtractionRecord& record, const ExtractionSchema& schema);

/// Serialized report in the interchange format (JSON).
std::string serialize_report(const ValidationReport& report);
ValidationReport parse_report(std::string_view text);

}  // namespace duplex
