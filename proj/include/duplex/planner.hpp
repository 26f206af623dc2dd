#pragma once

// Grounding, heuristic forward search and the external-solver adapter.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "duplex/pddl.hpp"

namespace duplex::planning {

using AtomId = std::uint32_t;

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<AtomId> pre_pos;
  std::vector<AtomId> pre_neg;
  std::vector<AtomId> add;
  std::vector<AtomId> del;
  int cost = 1;

  /// "(name arg1 arg2)"
  std::string printable() const;
};

struct AtomHash {
  std::size_t operator()(const pddl::Atom& atom) const noexcept;
};

/// Propositional task. Immutable once built by ground().
struct GroundTask {
  std::vector<pddl::Atom> atoms;
  std::vector<AtomId> init;      ///< sorted
  std::vector<AtomId> goal;      ///< positive goal atoms, sorted
  std::vector<AtomId> goal_neg;  ///< atoms that must be false, sorted
  std::vector<GroundAction> actions;  ///< ordered by printable name

  /// For each atom, the actions that have it as a positive precondition.
  std::vector<std::vector<std::uint32_t>> consumers;
  std::unordered_map<pddl::Atom, AtomId, AtomHash> index;

  std::optional<AtomId> find(const pddl::Atom& atom) const;
};

/// Dense truth assignment over a task's atoms.
class State {
 public:
  State() = default;
  explicit State(std::size_t num_atoms) : words_((num_atoms + 63) / 64, 0) {}

  bool test(AtomId a) const noexcept { return (words_[a >> 6] >> (a & 63)) & 1U; }
  void set(AtomId a) noexcept { words_[a >> 6] |= std::uint64_t{1} << (a & 63); }
  void reset(AtomId a) noexcept { words_[a >> 6] &= ~(std::uint64_t{1} << (a & 63)); }

  bool operator==(const State&) const = default;
  std::size_t hash() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  void assign(std::span<const std::uint64_t> words) { words_.assign(words.begin(), words.end()); }

 private:
  std::vector<std::uint64_t> words_;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept { return s.hash(); }
};

State initial_state(const GroundTask& task);
bool is_goal(const GroundTask& task, const State& state);
bool applicable(const GroundAction& action, const State& state);
State successor(const GroundAction& action, const State& state);
std::vector<pddl::Atom> true_atoms(const GroundTask& task, const State& state);

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

enum class DiagnosticCode { ParseFail, GroundFail, SearchFail, Timeout };
std::string_view to_string(DiagnosticCode code);
std::optional<DiagnosticCode> diagnostic_code_from_string(std::string_view name);

struct SearchStats {
  std::uint64_t expansions = 0;
  std::uint64_t generated = 0;
  double seconds = 0.0;
};

struct PlanStep {
  std::string name;
  std::vector<std::string> args;
  std::string printable() const;
  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  int cost = 0;
  SearchStats stats;
  /// Set by the embedded planner: the atoms true after the last step, sorted.
  std::optional<std::vector<pddl::Atom>> final_state;
};

struct PlannerDiagnostic {
  DiagnosticCode code = DiagnosticCode::SearchFail;
  std::string detail;
  SearchStats stats;
};

using PlannerOutcome = std::variant<Plan, PlannerDiagnostic>;

inline const Plan* plan_of(const PlannerOutcome& o) { return std::get_if<Plan>(&o); }
inline const PlannerDiagnostic* diagnostic_of(const PlannerOutcome& o) {
  return std::get_if<PlannerDiagnostic>(&o);
}

// ---------------------------------------------------------------------------
// Grounding and search
// ---------------------------------------------------------------------------

struct GroundOptions {
  /// Drop actions whose preconditions are unreachable under delete relaxation.
  bool relaxed_pruning = true;
};

/// Instantiates the actions over type-compatible objects. Fails with
/// GROUND_FAIL when a goal atom is not in init and no action schema can
/// produce it for the objects' types.
std::variant<GroundTask, PlannerDiagnostic> ground(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                                                   GroundOptions options = {});

enum class SearchMode { Satisficing, Optimal };
enum class Heuristic { HAdd, HMax, GoalCount, Blind };

std::string_view to_string(SearchMode mode);
std::string_view to_string(Heuristic h);
std::optional<Heuristic> heuristic_from_string(std::string_view name);

struct SearchConfig {
  SearchMode mode = SearchMode::Satisficing;
  Heuristic heuristic = Heuristic::HAdd;
  std::chrono::milliseconds time_budget{500'000};
  /// 0 = unlimited.
  std::uint64_t expansion_budget = 0;

  /// Throws std::invalid_argument when OPTIMAL is paired with an
  /// inadmissible heuristic.
  void validate() const;

  static SearchConfig satisficing() { return {}; }
  static SearchConfig optimal() { return {SearchMode::Optimal, Heuristic::HMax}; }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// GOALCOUNT counts unsatisfied goal literals; H_ADD and H_MAX are the
/// additive and max delete-relaxation estimates; BLIND is 0 on goal states
/// and 1 elsewhere. Relaxation heuristics return kInfinity when the goal is
/// unreachable ignoring deletes.
double heuristic_value(Heuristic h, const State& state, const GroundTask& task);

/// SATISFICING: greedy best-first; OPTIMAL: A*. Ties go to lower h, then
/// insertion order.
PlannerOutcome solve(const GroundTask& task, const SearchConfig& config);

/// ground() then solve().
PlannerOutcome plan_problem(const pddl::Domain& domain, const pddl::ProblemSpec& problem,
                            const SearchConfig& config);

// ---------------------------------------------------------------------------
// Plan files
// ---------------------------------------------------------------------------

class PlanFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One "(action arg...)" per line followed by a "; cost = N (unit cost)" line.
std::string format_plan(const std::vector<PlanStep>& steps);
/// Reads lines starting with '('; ';' comments and blank lines are ignored.
std::vector<PlanStep> parse_plan(std::string_view text);

// ---------------------------------------------------------------------------
// External solver
// ---------------------------------------------------------------------------

class ProcessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExternalSolverConfig {
  /// Shell command with {domain}, {problem} and {plan_out} placeholders.
  std::string command_template =
      "fast-downward.py --plan-file {plan_out} {domain} {problem} --alias lama-first";
  /// Fast Downward driver conventions.
  std::vector<int> unsolvable_exit_codes{10, 11, 12};
  std::vector<int> timeout_exit_codes{23};
};

/// Runs the solver, killing it when `budget` elapses.
PlannerOutcome solve_external(const std::filesystem::path& domain_path, const std::filesystem::path& problem_path,
                              const ExternalSolverConfig& config, std::chrono::milliseconds budget);

}  // namespace duplex::planning
