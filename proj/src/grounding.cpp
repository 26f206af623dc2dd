#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "duplex/planner.hpp"

namespace duplex::planning {

std::size_t AtomHash::operator()(const pddl::Atom& atom) const noexcept {
  std::size_t h = std::hash<std::string>{}(atom.predicate);
  for (const auto& a : atom.args) h = h * 1099511628211ULL ^ std::hash<std::string>{}(a);
  return h;
}

std::optional<AtomId> GroundTask::find(const pddl::Atom& atom) const {
  auto it = index.find(atom);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::string GroundAction::printable() const { return PlanStep{name, args}.printable(); }

std::string PlanStep::printable() const { return pddl::render_atom(pddl::Atom{name, args}); }

namespace {

struct Object {
  std::string name;
  std::string type;
};

/// Binding-time view of one schema literal.
struct Pattern {
  pddl::Literal literal;
  std::vector<int> slots;  ///< parameter index per arg, -1 for constants
  bool is_static = false;
  bool is_equality = false;
  int last_param = -1;  ///< all args bound once this parameter is assigned
};

pddl::Atom instantiate(const pddl::Atom& atom, const std::vector<int>& slots, const std::vector<const Object*>& binding) {
  pddl::Atom out{atom.predicate, atom.args};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] >= 0) out.args[i] = binding[static_cast<std::size_t>(slots[i])]->name;
  }
  return out;
}

std::vector<int> slots_of(const pddl::Atom& atom, const pddl::ActionSchema& schema) {
  std::vector<int> slots;
  for (const auto& arg : atom.args) {
    int slot = -1;
    for (std::size_t p = 0; p < schema.params.size(); ++p) {
      if (schema.params[p].name == arg) slot = static_cast<int>(p);
    }
    slots.push_back(slot);
  }
  return slots;
}

struct RawAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<pddl::Atom> pre_pos, pre_neg, add, del;
};

class Grounder {
 public:
  Grounder(const pddl::Domain& domain, const pddl::ProblemSpec& problem) : domain_(domain), problem_(problem) {
    for (const auto& c : domain.constants) objects_.push_back({c.name, c.type});
    for (const auto& o : problem.objects) objects_.push_back({o.name, o.type});
    for (const auto& a : domain.actions) {
      for (const auto* effs : {&a.add, &a.del}) {
        for (const auto& e : *effs) fluent_.insert(e.predicate);
      }
    }
  }

  std::optional<pddl::Atom> unproducible_goal() const {
    for (const auto& lit : problem_.goal) {
      const bool holds_initially = problem_.init.contains(lit.atom);
      if (lit.negated ? !holds_initially : holds_initially) continue;
      if (!producible(lit.atom, lit.negated)) return lit.atom;
    }
    return std::nullopt;
  }

  std::vector<RawAction> instantiate_all() {
    std::vector<RawAction> out;
    for (const auto& schema : domain_.actions) instantiate_schema(schema, out);
    return out;
  }

 private:
  const std::string* type_of(const std::string& name) const {
    for (const auto& o : objects_) {
      if (o.name == name) return &o.type;
    }
    return nullptr;
  }

  /// Whether some schema effect could yield `atom` (added, or deleted when
  /// `deleted`) given only parameter types.
  bool producible(const pddl::Atom& atom, bool deleted) const {
    for (const auto& schema : domain_.actions) {
      for (const auto& eff : deleted ? schema.del : schema.add) {
        if (eff.predicate != atom.predicate || eff.args.size() != atom.args.size()) continue;
        std::map<std::string, std::string> bound;
        bool ok = true;
        for (std::size_t i = 0; ok && i < eff.args.size(); ++i) {
          const std::string& term = eff.args[i];
          if (term.front() != '?') {
            ok = term == atom.args[i];
            continue;
          }
          auto [it, fresh] = bound.emplace(term, atom.args[i]);
          if (!fresh) {
            ok = it->second == atom.args[i];
            continue;
          }
          const auto param = std::find_if(schema.params.begin(), schema.params.end(),
                                          [&](const pddl::TypedName& p) { return p.name == term; });
          const std::string* type = type_of(atom.args[i]);
          ok = type != nullptr && domain_.types.is_subtype(*type, param->type);
        }
        if (ok) return true;
      }
    }
    return false;
  }

  void instantiate_schema(const pddl::ActionSchema& schema, std::vector<RawAction>& out) {
    std::vector<std::vector<const Object*>> candidates(schema.params.size());
    for (std::size_t p = 0; p < schema.params.size(); ++p) {
      for (const auto& o : objects_) {
        if (domain_.types.is_subtype(o.type, schema.params[p].type)) candidates[p].push_back(&o);
      }
      if (candidates[p].empty()) return;
    }

    std::vector<Pattern> patterns;
    for (const auto& lit : schema.precondition) {
      Pattern pat{lit, slots_of(lit.atom, schema)};
      pat.is_equality = lit.atom.predicate == pddl::kEqualityPredicate;
      pat.is_static = pat.is_equality || !fluent_.contains(lit.atom.predicate);
      for (int s : pat.slots) pat.last_param = std::max(pat.last_param, s);
      patterns.push_back(std::move(pat));
    }

    std::vector<const Object*> binding(schema.params.size(), nullptr);
    std::function<void(std::size_t)> assign = [&](std::size_t depth) {
      if (depth == schema.params.size()) {
        out.push_back(make_action(schema, patterns, binding));
        return;
      }
      for (const Object* obj : candidates[depth]) {
        binding[depth] = obj;
        if (static_ok(patterns, binding, static_cast<int>(depth))) assign(depth + 1);
      }
      binding[depth] = nullptr;
    };
    // Parameterless schemas still need their static preconditions checked.
    if (schema.params.empty() && !static_ok(patterns, binding, -1)) return;
    assign(0);
  }

  bool static_ok(const std::vector<Pattern>& patterns, const std::vector<const Object*>& binding, int depth) const {
    for (const auto& pat : patterns) {
      if (!pat.is_static || pat.last_param != depth) continue;
      const pddl::Atom atom = instantiate(pat.literal.atom, pat.slots, binding);
      bool holds;
      if (pat.is_equality) {
        holds = atom.args[0] == atom.args[1];
      } else {
        holds = problem_.init.contains(atom);
      }
      if (holds == pat.literal.negated) return false;
    }
    return true;
  }

  RawAction make_action(const pddl::ActionSchema& schema, const std::vector<Pattern>& patterns,
                        const std::vector<const Object*>& binding) const {
    RawAction a;
    a.name = schema.name;
    for (const auto* o : binding) a.args.push_back(o->name);
    for (const auto& pat : patterns) {
      if (pat.is_static) continue;  // already decided while binding
      (pat.literal.negated ? a.pre_neg : a.pre_pos).push_back(instantiate(pat.literal.atom, pat.slots, binding));
    }
    for (const auto& e : schema.add) a.add.push_back(instantiate(e, slots_of(e, schema), binding));
    for (const auto& e : schema.del) {
      pddl::Atom atom = instantiate(e, slots_of(e, schema), binding);
      // Add wins when an instance both adds and deletes an atom.
      if (std::find(a.add.begin(), a.add.end(), atom) == a.add.end()) a.del.push_back(std::move(atom));
    }
    return a;
  }

  const pddl::Domain& domain_;
  const pddl::ProblemSpec& problem_;
  std::vector<Object> objects_;
  std::set<std::string> fluent_;
};

std::vector<RawAction> relaxed_reachable(std::vector<RawAction> actions, const std::set<pddl::Atom>& init) {
  std::set<pddl::Atom> reached = init;
  std::vector<bool> fired(actions.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (fired[i]) continue;
      const auto& a = actions[i];
      if (!std::all_of(a.pre_pos.begin(), a.pre_pos.end(), [&](const pddl::Atom& p) { return reached.contains(p); })) {
        continue;
      }
      fired[i] = true;
      changed = true;
      reached.insert(a.add.begin(), a.add.end());
    }
  }
  std::vector<RawAction> kept;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (fired[i]) kept.push_back(std::move(actions[i]));
  }
  return kept;
}

}  // namespace

std::variant<GroundTask, PlannerDiagnostic> ground(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                                   GroundOptions options) {
  Grounder grounder(domain, problem);
  if (auto atom = grounder.unproducible_goal()) {
    return PlannerDiagnostic{DiagnosticCode::GroundFail,
                             "goal atom " + pddl::render_atom(*atom) + " cannot be produced by any action", {}};
  }
  std::vector<RawAction> raw = grounder.instantiate_all();
  if (options.relaxed_pruning) raw = relaxed_reachable(std::move(raw), problem.init);
  std::sort(raw.begin(), raw.end(), [](const RawAction& a, const RawAction& b) {
    return std::tie(a.name, a.args) < std::tie(b.name, b.args);
  });

  // Universe: init, goal and everything the remaining actions touch, in
  // lexicographic order so atom ids are stable.
  std::set<pddl::Atom> universe = problem.init;
  for (const auto& lit : problem.goal) universe.insert(lit.atom);
  for (const auto& a : raw) {
    for (const auto* list : {&a.pre_pos, &a.pre_neg, &a.add, &a.del}) universe.insert(list->begin(), list->end());
  }

  GroundTask task;
  task.atoms.assign(universe.begin(), universe.end());
  for (AtomId i = 0; i < task.atoms.size(); ++i) task.index.emplace(task.atoms[i], i);
  auto ids = [&](const std::vector<pddl::Atom>& atoms) {
    std::vector<AtomId> out;
    for (const auto& a : atoms) out.push_back(task.index.at(a));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  for (const auto& a : problem.init) task.init.push_back(task.index.at(a));
  std::sort(task.init.begin(), task.init.end());
  for (const auto& lit : problem.goal) (lit.negated ? task.goal_neg : task.goal).push_back(task.index.at(lit.atom));
  std::sort(task.goal.begin(), task.goal.end());
  std::sort(task.goal_neg.begin(), task.goal_neg.end());

  task.consumers.resize(task.atoms.size());
  for (auto& a : raw) {
    GroundAction g{std::move(a.name), std::move(a.args), ids(a.pre_pos), ids(a.pre_neg), ids(a.add), ids(a.del), 1};
    const auto idx = static_cast<std::uint32_t>(task.actions.size());
    for (AtomId p : g.pre_pos) task.consumers[p].push_back(idx);
    task.actions.push_back(std::move(g));
  }
  return task;
}

}  // namespace duplex::planning
