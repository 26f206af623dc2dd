#include <algorithm>
#include <queue>
#include <stdexcept>
#include <optional>
#include <span>

#include "duplex/planner.hpp"

namespace duplex::planning {

std::size_t State::hash() const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (auto w : words_) h = (h ^ static_cast<std::size_t>(w)) * 1099511628211ULL + (h >> 29);
  return h;
}

State initial_state(const GroundTask& task) {
  State s(task.atoms.size());
  for (AtomId a : task.init) s.set(a);
  return s;
}

bool is_goal(const GroundTask& task, const State& state) {
  return std::all_of(task.goal.begin(), task.goal.end(), [&](AtomId a) { return state.test(a); }) &&
         std::none_of(task.goal_neg.begin(), task.goal_neg.end(), [&](AtomId a) { return state.test(a); });
}

bool applicable(const GroundAction& action, const State& state) {
  return std::all_of(action.pre_pos.begin(), action.pre_pos.end(), [&](AtomId a) { return state.test(a); }) &&
         std::none_of(action.pre_neg.begin(), action.pre_neg.end(), [&](AtomId a) { return state.test(a); });
}

State successor(const GroundAction& action, const State& state) {
  State next = state;
  for (AtomId a : action.del) next.reset(a);
  for (AtomId a : action.add) next.set(a);
  return next;
}

std::vector<pddl::Atom> true_atoms(const GroundTask& task, const State& state) {
  std::vector<pddl::Atom> out;
  for (AtomId a = 0; a < task.atoms.size(); ++a) {
    if (state.test(a)) out.push_back(task.atoms[a]);
  }
  return out;
}

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::ParseFail: return "PARSE_FAIL";
    case DiagnosticCode::GroundFail: return "GROUND_FAIL";
    case DiagnosticCode::SearchFail: return "SEARCH_FAIL";
    case DiagnosticCode::Timeout: return "TIMEOUT";
  }
  return "?";
}

std::optional<DiagnosticCode> diagnostic_code_from_string(std::string_view name) {
  for (auto c : {DiagnosticCode::ParseFail, DiagnosticCode::GroundFail, DiagnosticCode::SearchFail,
                 DiagnosticCode::Timeout}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(SearchMode mode) {
  return mode == SearchMode::Optimal ? "OPTIMAL" : "SATISFICING";
}

std::string_view to_string(Heuristic h) {
  switch (h) {
    case Heuristic::HAdd: return "H_ADD";
    case Heuristic::HMax: return "H_MAX";
    case Heuristic::GoalCount: return "GOALCOUNT";
    case Heuristic::Blind: return "BLIND";
  }
  return "?";
}

std::optional<Heuristic> heuristic_from_string(std::string_view name) {
  for (auto h : {Heuristic::HAdd, Heuristic::HMax, Heuristic::GoalCount, Heuristic::Blind}) {
    if (to_string(h) == name) return h;
  }
  return std::nullopt;
}

void SearchConfig::validate() const {
  if (mode == SearchMode::Optimal && heuristic != Heuristic::HMax && heuristic != Heuristic::Blind) {
    throw std::invalid_argument("OPTIMAL search needs an admissible heuristic (H_MAX or BLIND), got " +
                                std::string(to_string(heuristic)));
  }
}

namespace {

using Clock = std::chrono::steady_clock;

/// Every generated state, stored back to back, with an open-addressing
/// index from state to node. Two flat arrays, so a large search frees in
/// constant time instead of one allocation per node.
class StateTable {
 public:
  explicit StateTable(std::size_t words) : words_(std::max<std::size_t>(words, 1)), slots_(1024, kEmpty) {}

  std::size_t size() const noexcept { return pool_.size() / words_; }
  std::span<const std::uint64_t> at(std::uint32_t node) const noexcept {
    return {pool_.data() + std::size_t{node} * words_, words_};
  }

  /// Node holding `state`, if any.
  std::optional<std::uint32_t> find(std::span<const std::uint64_t> state) const noexcept {
    for (std::size_t i = hash(state) & mask();; i = (i + 1) & mask()) {
      if (slots_[i] == kEmpty) return std::nullopt;
      if (equal(slots_[i], state)) return slots_[i];
    }
  }

  /// Appends `state` as a new node. A state already present is re-pointed
  /// at the new node.
  std::uint32_t insert(std::span<const std::uint64_t> state) {
    const auto node = static_cast<std::uint32_t>(size());
    pool_.insert(pool_.end(), state.begin(), state.end());
    if (2 * (++count_) > slots_.size()) grow();
    place(node);
    return node;
  }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffU;

  std::size_t mask() const noexcept { return slots_.size() - 1; }

  static std::size_t hash(std::span<const std::uint64_t> s) noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : s) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
  }

  bool equal(std::uint32_t node, std::span<const std::uint64_t> s) const noexcept {
    return std::equal(s.begin(), s.end(), pool_.begin() + static_cast<std::ptrdiff_t>(std::size_t{node} * words_));
  }

  void place(std::uint32_t node) {
    const auto s = at(node);
    for (std::size_t i = hash(s) & mask();; i = (i + 1) & mask()) {
      if (slots_[i] == kEmpty) {
        slots_[i] = node;
        return;
      }
      if (equal(slots_[i], s)) {
        --count_;
        slots_[i] = node;
        return;
      }
    }
  }

  void grow() {
    std::vector<std::uint32_t> old(slots_.size() * 2, kEmpty);
    old.swap(slots_);
    count_ = 0;
    for (auto node : old) {
      if (node != kEmpty) {
        ++count_;
        place(node);
      }
    }
  }

  std::size_t words_;
  std::vector<std::uint64_t> pool_;
  std::vector<std::uint32_t> slots_;
  std::size_t count_ = 0;
};

struct Node {
  std::int64_t parent;  ///< -1 for the root
  std::int64_t action;  ///< index into task.actions, -1 for the root
  int g;
};

struct OpenEntry {
  double f;
  double h;
  std::uint64_t order;
  std::uint32_t node;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return order > o.order;
  }
};

Plan extract_plan(const GroundTask& task, const std::vector<Node>& nodes, std::uint32_t goal_node,
                  const State& goal_state) {
  Plan plan;
  for (auto n = static_cast<std::int64_t>(goal_node); nodes[static_cast<std::size_t>(n)].action >= 0;
       n = nodes[static_cast<std::size_t>(n)].parent) {
    const auto& a = task.actions[static_cast<std::size_t>(nodes[static_cast<std::size_t>(n)].action)];
    plan.steps.push_back({a.name, a.args});
  }
  std::reverse(plan.steps.begin(), plan.steps.end());
  plan.cost = nodes[goal_node].g;
  plan.final_state = true_atoms(task, goal_state);
  return plan;
}

}  // namespace

PlannerOutcome solve(const GroundTask& task, const SearchConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const auto deadline = start + config.time_budget;
  const bool optimal = config.mode == SearchMode::Optimal;
  SearchStats stats;
  auto finish = [&]() { stats.seconds = std::chrono::duration<double>(Clock::now() - start).count(); };

  State init = initial_state(task);
  StateTable table(init.words().size());
  std::vector<Node> nodes;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::uint64_t order = 0;

  const double h0 = heuristic_value(config.heuristic, init, task);
  if (h0 == kInfinity) {
    finish();
    return PlannerDiagnostic{DiagnosticCode::SearchFail, "goal unreachable from the initial state", stats};
  }
  nodes.push_back({-1, -1, 0});
  table.insert(init.words());
  open.push({h0, h0, order++, 0});

  State current = init, next = init;
  for (std::uint64_t pops = 0; !open.empty(); ++pops) {
    if ((pops & 31) == 0 && Clock::now() >= deadline) {
      finish();
      return PlannerDiagnostic{DiagnosticCode::Timeout, "time budget exhausted", stats};
    }
    if (config.expansion_budget != 0 && stats.expansions >= config.expansion_budget) {
      finish();
      return PlannerDiagnostic{DiagnosticCode::Timeout, "expansion budget exhausted", stats};
    }
    const OpenEntry top = open.top();
    open.pop();
    const std::uint32_t id = top.node;
    current.assign(table.at(id));
    // Skip entries superseded by a cheaper path to the same state.
    if (table.find(current.words()) != id) continue;
    if (is_goal(task, current)) {
      finish();
      Plan plan = extract_plan(task, nodes, id, current);
      plan.stats = stats;
      return plan;
    }
    ++stats.expansions;

    for (std::size_t a = 0; a < task.actions.size(); ++a) {
      const auto& action = task.actions[a];
      if (!applicable(action, current)) continue;
      next.assign(current.words());
      for (AtomId x : action.del) next.reset(x);
      for (AtomId x : action.add) next.set(x);
      const int g = nodes[id].g + action.cost;
      const auto seen = table.find(next.words());
      if (seen && (!optimal || nodes[*seen].g <= g)) continue;
      ++stats.generated;
      const double h = heuristic_value(config.heuristic, next, task);
      if (h == kInfinity) continue;
      const std::uint32_t child = table.insert(next.words());
      nodes.push_back({static_cast<std::int64_t>(id), static_cast<std::int64_t>(a), g});
      open.push({optimal ? g + h : h, h, order++, child});
    }
  }
  finish();
  return PlannerDiagnostic{DiagnosticCode::SearchFail, "search space exhausted without reaching the goal", stats};
}

PlannerOutcome plan_problem(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                            const SearchConfig& config) {
  config.validate();
  const auto start = Clock::now();
  auto grounded = ground(domain, problem);
  if (auto* diag = std::get_if<PlannerDiagnostic>(&grounded)) return *diag;
  // Grounding time counts against the budget.
  SearchConfig rest = config;
  const auto spent = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  rest.time_budget = std::max(std::chrono::milliseconds(0), config.time_budget - spent);
  return solve(std::get<GroundTask>(grounded), rest);
}

}  // namespace duplex::planning
