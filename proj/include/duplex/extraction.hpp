#pragma once

// Extraction records: the objects/relations document an extractor returns,
// its JSON wire format, extractor implementations and fault injection.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace duplex {

struct ExtractedObject {
  std::string id;
  /// Absent when the extractor omitted the type.
  std::optional<std::string> type;
  bool operator==(const ExtractedObject&) const = default;
};

struct RelationEntry {
  std::string predicate;
  std::vector<std::string> args;
  bool operator==(const RelationEntry&) const = default;
};

// Top-level key paths that can be reported as absent.
inline constexpr std::string_view kKeyObjects = "objects";
inline constexpr std::string_view kKeyRelations = "relations";
inline constexpr std::string_view kKeyInit = "relations.init";
inline constexpr std::string_view kKeyGoal = "relations.goal";

struct ExtractionRecord {
  std::vector<ExtractedObject> objects;
  std::vector<RelationEntry> init_relations;
  std::vector<RelationEntry> goal_relations;
  /// Key paths absent from the wire document (kKey* values), in document order.
  std::vector<std::string> missing_keys;

  bool key_missing(std::string_view path) const;
  const ExtractedObject* find_object(std::string_view id) const;
  bool operator==(const ExtractionRecord&) const = default;
};

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the interchange document. Binary subject/predicate/object entries
/// become args = [subject, object]. Missing top-level keys are recorded in
/// missing_keys rather than rejected.
ExtractionRecord parse_record(std::string_view wire);

/// Always emits the args form; absent keys stay absent.
std::string serialize_record(const ExtractionRecord& record);

// ---------------------------------------------------------------------------
// Extractors
// ---------------------------------------------------------------------------

struct ExtractionTask {
  std::string id;
  std::string text;
};

class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FixtureMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Produces raw wire text for a task. Implementations must tolerate
/// concurrent calls from different runs.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual std::string extract(const ExtractionTask& task, const std::string& guide) const = 0;
};

/// Returns a fixture keyed by task id.
class ScriptedExtractor : public Extractor {
 public:
  ScriptedExtractor() = default;
  explicit ScriptedExtractor(std::map<std::string, std::string> fixtures)
      : fixtures_(std::move(fixtures)) {}

  void add(std::string task_id, std::string wire) { fixtures_[std::move(task_id)] = std::move(wire); }
  std::string extract(const ExtractionTask& task, const std::string& guide) const override;

 private:
  std::map<std::string, std::string> fixtures_;
};

/// Chat-completion endpoint settings shared by the live extractor and the
/// live repair agent.
struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{60'000};

  /// DUPLEX_<PREFIX>_BASE_URL / _MODEL / _API_KEY, falling back to
  /// DUPLEX_BASE_URL / DUPLEX_API_KEY / DUPLEX_MODEL.
  static EndpointConfig from_environment(std::string_view prefix);
};

/// POSTs {model, messages:[system, user]} to <base_url>/chat/completions and
/// returns choices[0].message.content. Throws EndpointError.
std::string chat_complete(const EndpointConfig& endpoint, const std::string& system_prompt,
                          const std::string& user_prompt);

/// Content of the first ``` fenced block, or the whole text when none.
std::string first_fenced_block(std::string_view reply);

class LiveExtractor : public Extractor {
 public:
  explicit LiveExtractor(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::string extract(const ExtractionTask& task, const std::string& guide) const override;

 private:
  EndpointConfig endpoint_;
};

// ---------------------------------------------------------------------------
// Fault injection
// ---------------------------------------------------------------------------

enum class FaultKind {
  DropMandatoryKey,
  StripObjectType,
  DuplicateObjectId,
  HallucinatePredicate,
  HallucinateType,
  UndeclaredArg,
  OmitInitFact,
  OmitGoalFact,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::DropMandatoryKey,     FaultKind::StripObjectType, FaultKind::DuplicateObjectId,
    FaultKind::HallucinatePredicate, FaultKind::HallucinateType, FaultKind::UndeclaredArg,
    FaultKind::OmitInitFact,         FaultKind::OmitGoalFact};

/// Detection level a fault is expected to surface at; 3 means it passes both
/// record validators and is left for the planner.
int expected_detection_level(FaultKind kind);

std::string_view to_string(FaultKind kind);
/// Accepts the upper-case enumerator names (DROP_MANDATORY_KEY, ...).
std::optional<FaultKind> fault_kind_from_string(std::string_view name);

class InapplicableFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies exactly one perturbation of `kind`, chosen deterministically by
/// `seed`. Throws InapplicableFault when the record lacks material for it.
ExtractionRecord inject_fault(const ExtractionRecord& record, FaultKind kind, std::uint64_t seed);

/// Wraps another extractor and corrupts its output with one fault.
class FaultInjectingExtractor : public Extractor {
 public:
  FaultInjectingExtractor(std::shared_ptr<const Extractor> base, FaultKind kind, std::uint64_t seed)
      : base_(std::move(base)), kind_(kind), seed_(seed) {}
  std::string extract(const ExtractionTask& task, const std::string& guide) const override;

 private:
  std::shared_ptr<const Extractor> base_;
  FaultKind kind_;
  std::uint64_t seed_;
};

}  // namespace duplex
