#pragma once

// Random schema-valid extraction records for property tests.

#include <random>
#include <string>
#include <vector>

#include "duplex/extraction.hpp"
#include "duplex/schema.hpp"

namespace duplex::testing {

class RecordGenerator {
 public:
  RecordGenerator(const ExtractionSchema& schema, std::uint64_t seed) : schema_(schema), rng_(seed) {
    types_ = schema.types.names();
  }

  ExtractionRecord next() {
    ExtractionRecord r;
    const int n_objects = pick(1, 8);
    for (int i = 0; i < n_objects; ++i) {
      r.objects.push_back({make_id(i), types_[static_cast<std::size_t>(pick(0, static_cast<int>(types_.size()) - 1))]});
    }
    const int n_init = pick(0, 10);
    const int n_goal = pick(0, 4);
    for (int i = 0; i < n_init; ++i) {
      if (auto rel = relation(r)) r.init_relations.push_back(*rel);
    }
    for (int i = 0; i < n_goal; ++i) {
      if (auto rel = relation(r)) r.goal_relations.push_back(*rel);
    }
    return r;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::string make_id(int i) {
    static const char* stems[] = {"obj", "block", "item_", "x", "room-", "9z"};
    return stems[pick(0, 5)] + std::to_string(i) + (pick(0, 3) == 0 ? "-b" : "");
  }

  std::optional<RelationEntry> relation(const ExtractionRecord& r) {
    if (schema_.predicates.empty()) return std::nullopt;
    const auto& sig = schema_.predicates[static_cast<std::size_t>(pick(0, static_cast<int>(schema_.predicates.size()) - 1))];
    RelationEntry rel{sig.name, {}};
    for (const auto& slot : sig.params) {
      std::vector<std::string> fits;
      for (const auto& o : r.objects) {
        if (schema_.types.is_subtype(*o.type, slot.type)) fits.push_back(o.id);
      }
      for (const auto& c : schema_.constants) {
        if (schema_.types.is_subtype(c.type, slot.type)) fits.push_back(c.name);
      }
      if (fits.empty()) return std::nullopt;
      rel.args.push_back(fits[static_cast<std::size_t>(pick(0, static_cast<int>(fits.size()) - 1))]);
    }
    return rel;
  }

  ExtractionSchema schema_;
  std::mt19937_64 rng_;
  std::vector<std::string> types_;
};

}  // namespace duplex::testing
