#include <algorithm>

#include "duplex/pddl.hpp"

namespace duplex::pddl {

namespace {

std::string located(const std::string& detail, SourcePos pos) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + detail;
}

}  // namespace

ParseError::ParseError(std::string detail, SourcePos pos)
    : PddlError("parse error at " + located(detail, pos), detail, pos) {}

UnsupportedConstruct::UnsupportedConstruct(std::string construct, SourcePos pos)
    : ParseError("unsupported construct '" + construct + "'", pos),
      construct_(std::move(construct)) {}

SemanticError::SemanticError(std::string detail, std::string symbol, SourcePos pos)
    : PddlError("semantic error: " + detail + " '" + symbol + "'", detail, pos), symbol_(symbol) {}

TypeTree::TypeTree() {
  order_.emplace_back(kRootType);
  parent_.emplace(std::string(kRootType), std::string());
}

void TypeTree::add(const std::string& name, const std::string& parent) {
  if (name == kRootType) {
    if (parent != kRootType && !parent.empty()) {
      throw std::invalid_argument("the root type cannot have a parent");
    }
    return;
  }
  if (parent == name) {
    throw std::invalid_argument("type '" + name + "' cannot be its own parent");
  }
  if (!contains(parent)) {
    order_.push_back(parent);
    parent_.emplace(parent, std::string(kRootType));
    implicit_.insert(parent);
  }
  auto it = parent_.find(name);
  if (it != parent_.end()) {
    if (it->second == parent) return;
    if (!implicit_.contains(name)) {
      throw std::invalid_argument("type '" + name + "' declared with conflicting parents '" +
                                  it->second + "' and '" + parent + "'");
    }
  }
  // Walking up from the new parent must not reach `name`.
  for (std::string_view cur = parent; !cur.empty(); cur = this->parent(cur)) {
    if (cur == name) throw std::invalid_argument("cyclic type declaration for '" + name + "'");
  }
  if (it != parent_.end()) {
    it->second = parent;
    implicit_.erase(name);
  } else {
    order_.push_back(name);
    parent_.emplace(name, parent);
  }
}

bool TypeTree::contains(std::string_view name) const { return parent_.contains(name); }

const std::string& TypeTree::parent(std::string_view name) const {
  auto it = parent_.find(name);
  if (it == parent_.end()) throw std::out_of_range("unknown type '" + std::string(name) + "'");
  return it->second;
}

bool TypeTree::is_subtype(std::string_view sub, std::string_view super) const {
  if (!contains(super)) throw std::out_of_range("unknown type '" + std::string(super) + "'");
  if (!contains(sub)) throw std::out_of_range("unknown type '" + std::string(sub) + "'");
  for (std::string_view cur = sub; !cur.empty(); cur = parent(cur)) {
    if (cur == super) return true;
  }
  return false;
}

bool TypeTree::operator==(const TypeTree& other) const {
  return order_ == other.order_ && parent_ == other.parent_;
}

bool is_subtype(std::string_view t1, std::string_view t2, const TypeTree& tree) {
  return tree.is_subtype(t1, t2);
}

const PredicateSig* Domain::find_predicate(std::string_view name) const {
  auto it = std::find_if(predicates.begin(), predicates.end(),
                         [&](const PredicateSig& p) { return p.name == name; });
  return it == predicates.end() ? nullptr : &*it;
}

const ActionSchema* Domain::find_action(std::string_view name) const {
  auto it = std::find_if(actions.begin(), actions.end(),
                         [&](const ActionSchema& a) { return a.name == name; });
  return it == actions.end() ? nullptr : &*it;
}

const TypedName* Domain::find_constant(std::string_view name) const {
  auto it = std::find_if(constants.begin(), constants.end(),
                         [&](const TypedName& c) { return c.name == name; });
  return it == constants.end() ? nullptr : &*it;
}

const TypedName* ProblemSpec::find_object(std::string_view name) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const TypedName& o) { return o.name == name; });
  return it == objects.end() ? nullptr : &*it;
}

std::vector<Literal> canonical_goal(std::vector<Literal> goal) {
  std::sort(goal.begin(), goal.end());
  goal.erase(std::unique(goal.begin(), goal.end()), goal.end());
  return goal;
}

const std::string* term_type(std::string_view term, const ProblemSpec& problem,
                             const Domain& domain) {
  if (const auto* o = problem.find_object(term)) return &o->type;
  if (const auto* c = domain.find_constant(term)) return &c->type;
  return nullptr;
}

bool is_valid_name(std::string_view name) {
  if (name.empty()) return false;
  auto ok_start = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  };
  if (!ok_start(name.front())) return false;
  return std::all_of(name.begin() + 1, name.end(),
                     [&](char c) { return ok_start(c) || c == '-'; });
}

namespace {

void check_atom(const Atom& atom, const ProblemSpec& problem, const Domain& domain) {
  const PredicateSig* sig = domain.find_predicate(atom.predicate);
  if (sig == nullptr) throw SemanticError("unknown predicate", atom.predicate);
  if (sig->arity() != atom.args.size()) {
    throw SemanticError("arity mismatch (expected " + std::to_string(sig->arity()) + ", got " +
                            std::to_string(atom.args.size()) + ")",
                        render_atom(atom));
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const std::string* type = term_type(atom.args[i], problem, domain);
    if (type == nullptr) throw SemanticError("undeclared object", atom.args[i]);
    if (!domain.types.is_subtype(*type, sig->params[i].type)) {
      throw SemanticError("type mismatch: '" + atom.args[i] + "' is '" + *type + "', slot " +
                              std::to_string(i + 1) + " of '" + sig->name + "' expects '" +
                              sig->params[i].type + "'",
                          atom.args[i]);
    }
  }
}

}  // namespace

void check_problem(const ProblemSpec& problem, const Domain& domain) {
  if (problem.domain_name != domain.name) {
    throw SemanticError("problem targets a different domain", problem.domain_name);
  }
  std::set<std::string_view> seen;
  for (const auto& obj : problem.objects) {
    if (!is_valid_name(obj.name)) throw SemanticError("malformed object name", obj.name);
    if (!seen.insert(obj.name).second) throw SemanticError("duplicate object", obj.name);
    if (domain.find_constant(obj.name) != nullptr) {
      throw SemanticError("object redeclares a domain constant", obj.name);
    }
    if (!domain.types.contains(obj.type)) throw SemanticError("unknown type", obj.type);
  }
  for (const auto& atom : problem.init) check_atom(atom, problem, domain);
  for (const auto& lit : problem.goal) check_atom(lit.atom, problem, domain);
}

}  // namespace duplex::pddl
