#include "duplex/validation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "json.hpp"

namespace duplex {

namespace {

struct IssueName {
  IssueKind kind;
  std::string_view name;
  int level;
};

constexpr IssueName kIssueNames[] = {
    {IssueKind::MissingKey, "MISSING_KEY", 1},
    {IssueKind::MissingType, "MISSING_TYPE", 1},
    {IssueKind::DuplicateId, "DUPLICATE_ID", 1},
    {IssueKind::ArityMismatch, "ARITY_MISMATCH", 1},
    {IssueKind::MalformedIdentifier, "MALFORMED_IDENTIFIER", 1},
    {IssueKind::UnknownPredicate, "UNKNOWN_PREDICATE", 2},
    {IssueKind::UnknownType, "UNKNOWN_TYPE", 2},
    {IssueKind::UndeclaredObject, "UNDECLARED_OBJECT", 2},
    {IssueKind::TypeMismatch, "TYPE_MISMATCH", 2},
};

constexpr std::pair<Verdict, std::string_view> kVerdictNames[] = {
    {Verdict::Pass, "PASS"},
    {Verdict::Corrected, "CORRECTED"},
    {Verdict::FailL1, "FAIL_L1"},
    {Verdict::FailL2, "FAIL_L2"},
};

std::string rel_path(bool init, std::size_t i) {
  return std::string(init ? kKeyInit : kKeyGoal) + "[" + std::to_string(i) + "]";
}

}  // namespace

int issue_level(IssueKind kind) {
  for (const auto& n : kIssueNames) {
    if (n.kind == kind) return n.level;
  }
  return 0;
}

std::string_view to_string(IssueKind kind) {
  for (const auto& n : kIssueNames) {
    if (n.kind == kind) return n.name;
  }
  return "?";
}

std::optional<IssueKind> issue_kind_from_string(std::string_view name) {
  for (const auto& n : kIssueNames) {
    if (n.name == name) return n.kind;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict verdict) {
  for (const auto& [v, n] : kVerdictNames) {
    if (v == verdict) return n;
  }
  return "?";
}

std::optional<Verdict> verdict_from_string(std::string_view name) {
  for (const auto& [v, n] : kVerdictNames) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::string normalize_identifier(std::string_view raw) {
  auto begin = raw.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = raw.find_last_not_of(" \t\r\n");
  std::string out;
  for (char c : raw.substr(begin, end - begin + 1)) {
    const auto u = static_cast<unsigned char>(c);
    const char lower = static_cast<char>(std::tolower(u));
    const bool ok = (lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '_' || lower == '-';
    out.push_back(ok ? lower : '_');
  }
  if (out.front() == '-') out.insert(out.begin(), 'x');
  return out;
}

// ===========================================================================
// Level 1
// ===========================================================================

namespace {

class Level1 {
 public:
  Level1(const ExtractionRecord& record, const ExtractionSchema& schema) : rec_(record), schema_(schema) {}

  ValidationReport run() {
    normalize_identifiers();
    restore_missing_keys();
    merge_duplicates();
    resolve_missing_types();
    check_arity();

    ValidationReport report;
    report.issues = std::move(issues_);
    if (report.issues.empty()) return report;
    const bool all_fixed = std::all_of(report.issues.begin(), report.issues.end(),
                                       [](const ValidationIssue& i) { return i.auto_corrected; });
    report.verdict = all_fixed ? Verdict::Corrected : Verdict::FailL1;
    if (changed_) report.corrected_record = std::move(rec_);
    return report;
  }

 private:
  void issue(IssueKind kind, std::string location, std::string detail, bool corrected) {
    issues_.push_back(ValidationIssue{1, kind, std::move(location), std::move(detail), corrected});
  }

  void fix_name(std::string& name, const std::string& location) {
    std::string norm = normalize_identifier(name);
    if (norm == name) return;
    issue(IssueKind::MalformedIdentifier, location, "'" + name + "' normalized to '" + norm + "'", true);
    name = std::move(norm);
    changed_ = true;
  }

  void normalize_identifiers() {
    for (std::size_t i = 0; i < rec_.objects.size(); ++i) {
      auto& o = rec_.objects[i];
      const std::string at = "objects[" + std::to_string(i) + "]";
      fix_name(o.id, at + ".id");
      if (o.type) fix_name(*o.type, at + ".type");
    }
    for (bool init : {true, false}) {
      auto& rels = init ? rec_.init_relations : rec_.goal_relations;
      for (std::size_t i = 0; i < rels.size(); ++i) {
        const std::string at = rel_path(init, i);
        fix_name(rels[i].predicate, at + ".predicate");
        for (std::size_t k = 0; k < rels[i].args.size(); ++k) {
          fix_name(rels[i].args[k], at + ".args[" + std::to_string(k) + "]");
        }
      }
    }
  }

  void restore_missing_keys() {
    std::vector<std::string> still_missing;
    for (const auto& key : rec_.missing_keys) {
      if (key == kKeyObjects) {
        // Re-declare every non-constant argument; types are inferred below.
        std::set<std::string> seen;
        for (const auto* rels : {&rec_.init_relations, &rec_.goal_relations}) {
          for (const auto& r : *rels) {
            for (const auto& a : r.args) {
              if (schema_.find_constant(a) == nullptr && seen.insert(a).second) {
                rec_.objects.push_back(ExtractedObject{a, std::nullopt});
              }
            }
          }
        }
        issue(IssueKind::MissingKey, key,
              "objects re-declared from " + std::to_string(seen.size()) + " relation arguments", true);
      } else if (key == kKeyRelations) {
        issue(IssueKind::MissingKey, std::string(kKeyInit), "absent initial state read as empty", true);
        issue(IssueKind::MissingKey, std::string(kKeyGoal), "no goal given; a goal cannot be inferred", false);
        still_missing.emplace_back(kKeyRelations);
      } else if (key == kKeyInit) {
        issue(IssueKind::MissingKey, key, "absent initial state read as empty", true);
      } else {
        issue(IssueKind::MissingKey, key, "no goal given; a goal cannot be inferred", false);
        still_missing.push_back(key);
      }
    }
    if (still_missing.size() != rec_.missing_keys.size()) changed_ = true;
    // A missing "relations" block keeps only its goal half missing.
    for (auto& k : still_missing) {
      if (k == kKeyRelations) {
        k = std::string(kKeyGoal);
        changed_ = true;
      }
    }
    rec_.missing_keys = std::move(still_missing);
  }

  void merge_duplicates() {
    std::map<std::string, std::vector<std::size_t>> positions;
    for (std::size_t i = 0; i < rec_.objects.size(); ++i) positions[rec_.objects[i].id].push_back(i);
    std::set<std::size_t> drop;
    for (const auto& [id, where] : positions) {
      if (where.size() < 2) continue;
      std::set<std::string> types;
      for (auto i : where) {
        if (rec_.objects[i].type) types.insert(*rec_.objects[i].type);
      }
      const std::string at = "objects[" + std::to_string(where[1]) + "]";
      if (types.size() > 1) {
        std::string listed;
        for (const auto& t : types) listed += (listed.empty() ? "" : ", ") + t;
        issue(IssueKind::DuplicateId, at, "'" + id + "' declared with conflicting types {" + listed + "}", false);
        continue;
      }
      issue(IssueKind::DuplicateId, at, "repeated declaration of '" + id + "' merged", true);
      if (!types.empty()) rec_.objects[where[0]].type = *types.begin();
      drop.insert(where.begin() + 1, where.end());
    }
    if (drop.empty()) return;
    std::vector<ExtractedObject> kept;
    for (std::size_t i = 0; i < rec_.objects.size(); ++i) {
      if (!drop.contains(i)) kept.push_back(std::move(rec_.objects[i]));
    }
    rec_.objects = std::move(kept);
    changed_ = true;
  }

  /// Most specific type that every slot constraint admits, if the
  /// constraints form a chain.
  std::optional<std::string> infer_type(const std::string& id) const {
    std::set<std::string> slots;
    for (const auto* rels : {&rec_.init_relations, &rec_.goal_relations}) {
      for (const auto& r : *rels) {
        const auto* sig = schema_.find_predicate(r.predicate);
        if (sig == nullptr || sig->arity() != r.args.size()) continue;
        for (std::size_t k = 0; k < r.args.size(); ++k) {
          if (r.args[k] == id) slots.insert(sig->params[k].type);
        }
      }
    }
    if (slots.empty()) {
      if (schema_.types.size() == 1) return std::string(pddl::kRootType);
      return std::nullopt;
    }
    for (const auto& candidate : slots) {
      if (std::all_of(slots.begin(), slots.end(),
                      [&](const std::string& s) { return schema_.types.is_subtype(candidate, s); })) {
        return candidate;
      }
    }
    return std::nullopt;
  }

  void resolve_missing_types() {
    std::vector<ExtractedObject> kept;
    for (std::size_t i = 0; i < rec_.objects.size(); ++i) {
      ExtractedObject& o = rec_.objects[i];
      const std::string at = "objects[" + std::to_string(i) + "].type";
      if (o.type) {
        kept.push_back(std::move(o));
        continue;
      }
      if (schema_.find_constant(o.id) != nullptr) {
        issue(IssueKind::MissingType, at, "'" + o.id + "' is a domain constant; declaration dropped", true);
        changed_ = true;
        continue;
      }
      if (auto t = infer_type(o.id)) {
        issue(IssueKind::MissingType, at, "type of '" + o.id + "' inferred as '" + *t + "'", true);
        o.type = std::move(t);
        changed_ = true;
      } else {
        issue(IssueKind::MissingType, at, "type of '" + o.id + "' cannot be determined from the schema", false);
      }
      kept.push_back(std::move(o));
    }
    rec_.objects = std::move(kept);
  }

  void check_arity() {
    for (bool init : {true, false}) {
      const auto& rels = init ? rec_.init_relations : rec_.goal_relations;
      for (std::size_t i = 0; i < rels.size(); ++i) {
        const auto* sig = schema_.find_predicate(rels[i].predicate);
        if (sig == nullptr || sig->arity() == rels[i].args.size()) continue;
        issue(IssueKind::ArityMismatch, rel_path(init, i),
              "'" + sig->name + "' takes " + std::to_string(sig->arity()) + " arguments, got " +
                  std::to_string(rels[i].args.size()),
              false);
      }
    }
  }

  ExtractionRecord rec_;
  const ExtractionSchema& schema_;
  std::vector<ValidationIssue> issues_;
  bool changed_ = false;
};

}  // namespace

ValidationReport validate_level1(const ExtractionRecord& record, const ExtractionSchema& schema) {
  return Level1(record, schema).run();
}

// ===========================================================================
// Level 2
// ===========================================================================

ValidationReport validate_level2(const ExtractionRecord& record, const ExtractionSchema& schema) {
  ValidationReport report;
  auto issue = [&](IssueKind kind, std::string location, std::string detail) {
    report.issues.push_back(ValidationIssue{2, kind, std::move(location), std::move(detail), false});
  };

  std::map<std::string, const std::string*> declared;
  for (std::size_t i = 0; i < record.objects.size(); ++i) {
    const auto& o = record.objects[i];
    const std::string at = "objects[" + std::to_string(i) + "]";
    const std::string* type = o.type ? &*o.type : nullptr;
    if (type != nullptr && !schema.types.contains(*type)) {
      issue(IssueKind::UnknownType, at + ".type", "'" + *type + "' is not a type of the domain");
      type = nullptr;
    }
    if (const auto* c = schema.find_constant(o.id); c != nullptr && type != nullptr && c->type != *type) {
      issue(IssueKind::TypeMismatch, at + ".type",
            "'" + o.id + "' is a constant of type '" + c->type + "', declared as '" + *type + "'");
    }
    declared.emplace(o.id, type);
  }
  for (const auto& c : schema.constants) declared.emplace(c.name, &c.type);

  for (bool init : {true, false}) {
    const auto& rels = init ? record.init_relations : record.goal_relations;
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const auto& r = rels[i];
      const std::string at = rel_path(init, i);
      const auto* sig = schema.find_predicate(r.predicate);
      if (sig == nullptr) {
        issue(IssueKind::UnknownPredicate, at + ".predicate", "'" + r.predicate + "' is not a predicate of the domain");
      }
      for (std::size_t k = 0; k < r.args.size(); ++k) {
        const std::string arg_at = at + ".args[" + std::to_string(k) + "]";
        auto it = declared.find(r.args[k]);
        if (it == declared.end()) {
          issue(IssueKind::UndeclaredObject, arg_at, "'" + r.args[k] + "' is neither a declared object nor a constant");
          continue;
        }
        if (sig == nullptr || sig->arity() != r.args.size() || it->second == nullptr) continue;
        const std::string& slot = sig->params[k].type;
        if (!schema.types.is_subtype(*it->second, slot)) {
          issue(IssueKind::TypeMismatch, arg_at,
                "'" + r.args[k] + "' has type '" + *it->second + "' but slot " + std::to_string(k + 1) + " of '" +
                    sig->name + "' expects '" + slot + "'");
        }
      }
    }
  }
  if (!report.issues.empty()) report.verdict = Verdict::FailL2;
  return report;
}

// ===========================================================================
// Interchange
// ===========================================================================

std::string serialize_report(const ValidationReport& report) {
  nlohmann::ordered_json doc;
  doc["verdict"] = to_string(report.verdict);
  doc["issues"] = nlohmann::ordered_json::array();
  for (const auto& i : report.issues) {
    nlohmann::ordered_json e;
    e["level"] = i.level;
    e["kind"] = to_string(i.kind);
    e["location"] = i.location;
    e["detail"] = i.detail;
    e["auto_corrected"] = i.auto_corrected;
    doc["issues"].push_back(std::move(e));
  }
  if (report.corrected_record) {
    doc["corrected_record"] = nlohmann::ordered_json::parse(serialize_record(*report.corrected_record));
  }
  return doc.dump(2) + "\n";
}

ValidationReport parse_report(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text.begin(), text.end());
    ValidationReport report;
    auto verdict = verdict_from_string(doc.at("verdict").get<std::string>());
    if (!verdict) throw WireError("unknown verdict");
    report.verdict = *verdict;
    for (const auto& e : doc.at("issues")) {
      auto kind = issue_kind_from_string(e.at("kind").get<std::string>());
      if (!kind) throw WireError("unknown issue kind");
      report.issues.push_back(ValidationIssue{e.at("level").get<int>(), *kind, e.at("location").get<std::string>(),
                                              e.at("detail").get<std::string>(), e.at("auto_corrected").get<bool>()});
    }
    if (doc.contains("corrected_record")) report.corrected_record = parse_record(doc["corrected_record"].dump());
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw WireError(std::string("malformed validation report: ") + e.what());
  }
}

}  // namespace duplex
