#include "duplex/extraction.hpp"

#include <algorithm>
#include <random>

#include "json.hpp"

namespace duplex {

using nlohmann::json;
using nlohmann::ordered_json;

bool ExtractionRecord::key_missing(std::string_view path) const {
  return std::find(missing_keys.begin(), missing_keys.end(), path) != missing_keys.end();
}

const ExtractedObject* ExtractionRecord::find_object(std::string_view id) const {
  auto it = std::find_if(objects.begin(), objects.end(), [&](const ExtractedObject& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

namespace {

std::string require_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw WireError(where + ": expected a string");
  std::string s = v.get<std::string>();
  if (s.empty()) throw WireError(where + ": empty identifier");
  return s;
}

std::vector<RelationEntry> parse_relations(const json& list, const std::string& where) {
  if (!list.is_array()) throw WireError(where + ": expected an array");
  std::vector<RelationEntry> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!e.is_object()) throw WireError(at + ": expected an object");
    if (!e.contains("predicate")) throw WireError(at + ": missing 'predicate'");
    RelationEntry rel;
    rel.predicate = require_string(e["predicate"], at + ".predicate");
    if (e.contains("args")) {
      if (e.contains("subject") || e.contains("object")) {
        throw WireError(at + ": 'args' cannot be combined with 'subject'/'object'");
      }
      const json& args = e["args"];
      if (!args.is_array()) throw WireError(at + ".args: expected an array");
      for (std::size_t k = 0; k < args.size(); ++k) {
        rel.args.push_back(require_string(args[k], at + ".args[" + std::to_string(k) + "]"));
      }
    } else {
      if (!e.contains("subject")) throw WireError(at + ": expected 'args' or 'subject'");
      rel.args.push_back(require_string(e["subject"], at + ".subject"));
      if (e.contains("object")) rel.args.push_back(require_string(e["object"], at + ".object"));
    }
    out.push_back(std::move(rel));
  }
  return out;
}

}  // namespace

ExtractionRecord parse_record(std::string_view wire) {
  json doc;
  try {
    doc = json::parse(wire.begin(), wire.end());
  } catch (const json::parse_error& e) {
    throw WireError(std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw WireError("top level: expected an object");

  ExtractionRecord record;
  if (!doc.contains("objects")) {
    record.missing_keys.emplace_back(kKeyObjects);
  } else {
    const json& objs = doc["objects"];
    if (!objs.is_array()) throw WireError("objects: expected an array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const json& o = objs[i];
      const std::string at = "objects[" + std::to_string(i) + "]";
      if (!o.is_object()) throw WireError(at + ": expected an object");
      if (!o.contains("id")) throw WireError(at + ": missing 'id'");
      ExtractedObject obj;
      obj.id = require_string(o["id"], at + ".id");
      // A null or empty type counts as omitted; Level 1 decides what to do.
      if (o.contains("type") && !o["type"].is_null()) {
        if (!o["type"].is_string()) throw WireError(at + ".type: expected a string");
        std::string type = o["type"].get<std::string>();
        if (!type.empty()) obj.type = std::move(type);
      }
      record.objects.push_back(std::move(obj));
    }
  }

  if (!doc.contains("relations")) {
    record.missing_keys.emplace_back(kKeyRelations);
  } else {
    const json& rels = doc["relations"];
    if (!rels.is_object()) throw WireError("relations: expected an object");
    if (rels.contains("init")) {
      record.init_relations = parse_relations(rels["init"], "relations.init");
    } else {
      record.missing_keys.emplace_back(kKeyInit);
    }
    if (rels.contains("goal")) {
      record.goal_relations = parse_relations(rels["goal"], "relations.goal");
    } else {
      record.missing_keys.emplace_back(kKeyGoal);
    }
  }
  return record;
}

namespace {

ordered_json relations_to_json(const std::vector<RelationEntry>& rels) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rels) {
    ordered_json e;
    e["predicate"] = r.predicate;
    e["args"] = r.args;
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace

std::string serialize_record(const ExtractionRecord& record) {
  ordered_json doc = ordered_json::object();
  if (!record.key_missing(kKeyObjects)) {
    ordered_json objs = ordered_json::array();
    for (const auto& o : record.objects) {
      ordered_json e;
      e["id"] = o.id;
      if (o.type) e["type"] = *o.type;
      objs.push_back(std::move(e));
    }
    doc["objects"] = std::move(objs);
  }
  if (!record.key_missing(kKeyRelations)) {
    ordered_json rels = ordered_json::object();
    if (!record.key_missing(kKeyInit)) rels["init"] = relations_to_json(record.init_relations);
    if (!record.key_missing(kKeyGoal)) rels["goal"] = relations_to_json(record.goal_relations);
    doc["relations"] = std::move(rels);
  }
  return doc.dump(2) + "\n";
}

std::string ScriptedExtractor::extract(const ExtractionTask& task, const std::string&) const {
  auto it = fixtures_.find(task.id);
  if (it == fixtures_.end()) throw FixtureMissing("no scripted extraction for task '" + task.id + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Fault injection
// ---------------------------------------------------------------------------

namespace {

struct FaultName {
  FaultKind kind;
  std::string_view name;
  int level;
};

constexpr FaultName kFaultNames[] = {
    {FaultKind::DropMandatoryKey, "DROP_MANDATORY_KEY", 1},
    {FaultKind::StripObjectType, "STRIP_OBJECT_TYPE", 1},
    {FaultKind::DuplicateObjectId, "DUPLICATE_OBJECT_ID", 1},
    {FaultKind::HallucinatePredicate, "HALLUCINATE_PREDICATE", 2},
    {FaultKind::HallucinateType, "HALLUCINATE_TYPE", 2},
    {FaultKind::UndeclaredArg, "UNDECLARED_ARG", 2},
    {FaultKind::OmitInitFact, "OMIT_INIT_FACT", 3},
    {FaultKind::OmitGoalFact, "OMIT_GOAL_FACT", 3},
};

const FaultName& entry(FaultKind kind) {
  return *std::find_if(std::begin(kFaultNames), std::end(kFaultNames),
                       [&](const FaultName& f) { return f.kind == kind; });
}

// Invented vocabulary; none of it occurs in the bundled domains.
constexpr std::string_view kPhantomPredicates[] = {"levitates", "is-glowing", "hovers-over", "sings-to"};
constexpr std::string_view kPhantomTypes[] = {"gizmo", "phantom-thing", "widget", "doohickey"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

int expected_detection_level(FaultKind kind) { return entry(kind).level; }

std::string_view to_string(FaultKind kind) { return entry(kind).name; }

std::optional<FaultKind> fault_kind_from_string(std::string_view name) {
  for (const auto& f : kFaultNames) {
    if (f.name == name) return f.kind;
  }
  return std::nullopt;
}

ExtractionRecord inject_fault(const ExtractionRecord& record, FaultKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ExtractionRecord out = record;
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw InapplicableFault(std::string(to_string(kind)) + ": " + what);
  };

  switch (kind) {
    case FaultKind::DropMandatoryKey: {
      need(!record.key_missing(kKeyObjects) && !record.objects.empty(), "record has no objects to drop");
      out.objects.clear();
      out.missing_keys.insert(out.missing_keys.begin(), std::string(kKeyObjects));
      break;
    }
    case FaultKind::StripObjectType: {
      std::vector<std::size_t> typed;
      for (std::size_t i = 0; i < record.objects.size(); ++i) {
        if (record.objects[i].type) typed.push_back(i);
      }
      need(!typed.empty(), "no typed object");
      out.objects[typed[pick(rng, typed.size())]].type.reset();
      break;
    }
    case FaultKind::DuplicateObjectId: {
      need(!record.objects.empty(), "no object to duplicate");
      const std::size_t i = pick(rng, record.objects.size());
      out.objects.insert(out.objects.begin() + static_cast<std::ptrdiff_t>(i) + 1, record.objects[i]);
      break;
    }
    case FaultKind::HallucinatePredicate: {
      const std::size_t n = record.init_relations.size() + record.goal_relations.size();
      need(n > 0, "no relation to corrupt");
      const std::size_t i = pick(rng, n);
      auto& rel = i < record.init_relations.size() ? out.init_relations[i]
                                                   : out.goal_relations[i - record.init_relations.size()];
      rel.predicate = std::string(kPhantomPredicates[pick(rng, std::size(kPhantomPredicates))]);
      break;
    }
    case FaultKind::HallucinateType: {
      need(!record.objects.empty(), "no object to retype");
      const std::size_t i = pick(rng, record.objects.size());
      out.objects[i].type = std::string(kPhantomTypes[pick(rng, std::size(kPhantomTypes))]);
      break;
    }
    case FaultKind::UndeclaredArg: {
      std::vector<std::pair<bool, std::size_t>> with_args;
      for (std::size_t i = 0; i < record.init_relations.size(); ++i) {
        if (!record.init_relations[i].args.empty()) with_args.emplace_back(true, i);
      }
      for (std::size_t i = 0; i < record.goal_relations.size(); ++i) {
        if (!record.goal_relations[i].args.empty()) with_args.emplace_back(false, i);
      }
      need(!with_args.empty(), "no relation with arguments");
      const auto [is_init, i] = with_args[pick(rng, with_args.size())];
      auto& rel = is_init ? out.init_relations[i] : out.goal_relations[i];
      std::string phantom;
      for (unsigned n = 7 + static_cast<unsigned>(pick(rng, 90));; ++n) {
        phantom = "phantom_" + std::to_string(n);
        if (record.find_object(phantom) == nullptr) break;
      }
      rel.args[pick(rng, rel.args.size())] = phantom;
      break;
    }
    case FaultKind::OmitInitFact: {
      need(!record.init_relations.empty(), "no init fact to omit");
      out.init_relations.erase(out.init_relations.begin() +
                               static_cast<std::ptrdiff_t>(pick(rng, record.init_relations.size())));
      break;
    }
    case FaultKind::OmitGoalFact: {
      need(!record.goal_relations.empty(), "no goal fact to omit");
      out.goal_relations.erase(out.goal_relations.begin() +
                               static_cast<std::ptrdiff_t>(pick(rng, record.goal_relations.size())));
      break;
    }
  }
  return out;
}

std::string FaultInjectingExtractor::extract(const ExtractionTask& task, const std::string& guide) const {
  return serialize_record(inject_fault(parse_record(base_->extract(task, guide)), kind_, seed_));
}

}  // namespace duplex
