#pragma once

// PDDL subset (:strips :typing :negative-preconditions :equality): data
// model, parser and problem renderer.

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace duplex::pddl {

/// 1-based line/column plus the 0-based byte offset into the source.
struct SourcePos {
  std::size_t offset = 0;
  int line = 1;
  int column = 1;
};

class PddlError : public std::runtime_error {
 public:
  PddlError(const std::string& what, std::string detail, SourcePos pos)
      : std::runtime_error(what), detail_(std::move(detail)), pos_(pos) {}

  const std::string& detail() const noexcept { return detail_; }
  const SourcePos& position() const noexcept { return pos_; }

 private:
  std::string detail_;
  SourcePos pos_;
};

/// Malformed input: unexpected token, unbalanced parentheses, undeclared
/// symbols inside a domain file.
class ParseError : public PddlError {
 public:
  ParseError(std::string detail, SourcePos pos);
};

/// A construct outside the supported subset (quantifiers, conditional
/// effects, numeric fluents, ...).
class UnsupportedConstruct : public ParseError {
 public:
  UnsupportedConstruct(std::string construct, SourcePos pos);
  const std::string& construct() const noexcept { return construct_; }

 private:
  std::string construct_;
};

/// A well-formed problem that does not type-check against its domain.
class SemanticError : public PddlError {
 public:
  SemanticError(std::string detail, std::string symbol, SourcePos pos = {});
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

inline constexpr std::string_view kRootType = "object";
inline constexpr std::string_view kEqualityPredicate = "=";

/// Single-inheritance type hierarchy rooted at `object`.
class TypeTree {
 public:
  TypeTree();

  /// Declares `name` below `parent`. Types referenced only as parents are
  /// declared implicitly under the root and may be re-parented once.
  /// Throws std::invalid_argument on conflicting parents or cycles.
  void add(const std::string& name, const std::string& parent = std::string(kRootType));

  bool contains(std::string_view name) const;
  /// Empty for the root. Throws std::out_of_range for unknown types.
  const std::string& parent(std::string_view name) const;
  /// Throws std::out_of_range for unknown types.
  bool is_subtype(std::string_view sub, std::string_view super) const;
  /// All names in declaration order, root first.
  const std::vector<std::string>& names() const noexcept { return order_; }
  std::size_t size() const noexcept { return order_.size(); }

  bool operator==(const TypeTree& other) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string, std::less<>> parent_;
  std::set<std::string, std::less<>> implicit_;
};

/// t1 == t2 or t1 is a transitive descendant of t2.
bool is_subtype(std::string_view t1, std::string_view t2, const TypeTree& tree);

struct TypedName {
  std::string name;
  std::string type;
  auto operator<=>(const TypedName&) const = default;
};

struct PredicateSig {
  std::string name;
  std::vector<TypedName> params;
  std::size_t arity() const noexcept { return params.size(); }
  bool operator==(const PredicateSig&) const = default;
};

/// Predicate applied to terms. Terms starting with '?' are variables.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;
  auto operator<=>(const Atom&) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;
  auto operator<=>(const Literal&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Literal> precondition;
  std::vector<Atom> add;
  std::vector<Atom> del;
  bool operator==(const ActionSchema&) const = default;
};

struct Domain {
  std::string name;
  std::vector<std::string> requirements;
  TypeTree types;
  std::vector<PredicateSig> predicates;
  std::vector<TypedName> constants;
  std::vector<ActionSchema> actions;

  const PredicateSig* find_predicate(std::string_view name) const;
  const ActionSchema* find_action(std::string_view name) const;
  const TypedName* find_constant(std::string_view name) const;
};

struct ProblemSpec {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;
  std::set<Atom> init;
  /// Canonical order: sorted, duplicates removed (see canonical_goal).
  std::vector<Literal> goal;

  const TypedName* find_object(std::string_view name) const;
  bool operator==(const ProblemSpec&) const = default;
};

/// Sorts and deduplicates a goal conjunction.
std::vector<Literal> canonical_goal(std::vector<Literal> goal);

Domain parse_domain(std::string_view text);
ProblemSpec parse_problem(std::string_view text, const Domain& domain);

/// Re-checks every ProblemSpec invariant against `domain`; throws
/// SemanticError naming the first offending symbol.
void check_problem(const ProblemSpec& problem, const Domain& domain);

/// Type of an object or domain constant, or nullptr when undeclared.
const std::string* term_type(std::string_view term, const ProblemSpec& problem,
                             const Domain& domain);

std::string render_atom(const Atom& atom);
std::string render_literal(const Literal& literal);
std::string render_problem(const ProblemSpec& problem);

/// Lower-case identifier check used by the parser and the record validator:
/// starts with a letter, digit or '_', continues with those or '-'.
bool is_valid_name(std::string_view name);

}  // namespace duplex::pddl
