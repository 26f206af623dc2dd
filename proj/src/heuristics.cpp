#include <algorithm>
#include <functional>
#include <queue>

#include "duplex/planner.hpp"

namespace duplex::planning {

namespace {

/// Delete-relaxation cost of every atom, combining precondition costs with
/// sum (h_add) or max (h_max). Generalized Dijkstra: an action fires once its
/// last unsatisfied precondition is settled.
std::vector<double> relaxed_costs(const GroundTask& task, const State& state, bool additive) {
  std::vector<double> cost(task.atoms.size(), kInfinity);
  std::vector<std::size_t> unsatisfied(task.actions.size());
  std::vector<double> pre_cost(task.actions.size(), 0.0);
  using Entry = std::pair<double, AtomId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  auto fire = [&](std::size_t a) {
    const double c = pre_cost[a] + task.actions[a].cost;
    for (AtomId e : task.actions[a].add) {
      if (c < cost[e]) {
        cost[e] = c;
        open.emplace(c, e);
      }
    }
  };

  for (AtomId a = 0; a < task.atoms.size(); ++a) {
    if (state.test(a)) {
      cost[a] = 0.0;
      open.emplace(0.0, a);
    }
  }
  for (std::size_t a = 0; a < task.actions.size(); ++a) {
    unsatisfied[a] = task.actions[a].pre_pos.size();
    if (unsatisfied[a] == 0) fire(a);
  }

  std::vector<bool> settled(task.atoms.size(), false);
  while (!open.empty()) {
    auto [c, atom] = open.top();
    open.pop();
    if (settled[atom] || c > cost[atom]) continue;
    settled[atom] = true;
    for (std::uint32_t a : task.consumers[atom]) {
      pre_cost[a] = additive ? pre_cost[a] + c : std::max(pre_cost[a], c);
      if (--unsatisfied[a] == 0) fire(a);
    }
  }
  return cost;
}

}  // namespace

double heuristic_value(Heuristic h, const State& state, const GroundTask& task) {
  switch (h) {
    case Heuristic::Blind:
      return is_goal(task, state) ? 0.0 : 1.0;
    case Heuristic::GoalCount: {
      double n = 0;
      for (AtomId g : task.goal) n += state.test(g) ? 0 : 1;
      for (AtomId g : task.goal_neg) n += state.test(g) ? 1 : 0;
      return n;
    }
    case Heuristic::HAdd:
    case Heuristic::HMax: {
      const bool additive = h == Heuristic::HAdd;
      const auto cost = relaxed_costs(task, state, additive);
      double total = 0.0;
      for (AtomId g : task.goal) {
        if (cost[g] == kInfinity) return kInfinity;
        total = additive ? total + cost[g] : std::max(total, cost[g]);
      }
      // Negative goals are ignored by the relaxation; keep h=0 exact on goals.
      if (total == 0.0 && !is_goal(task, state)) total = additive ? 1.0 : 0.0;
      return total;
    }
  }
  return kInfinity;
}

}  // namespace duplex::planning
