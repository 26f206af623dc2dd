// duplex: every pipeline stage as a subcommand, plus single-task and suite runs.
//
// Exit status: 0 on success, 1 when the stage ran but produced a negative
// result (invalid record, no plan, invalid plan, unsolved task), 2 on usage
// and input errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli_settings.hpp"
#include "duplex/harness.hpp"
#include "duplex/mapper.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace duplex;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing ") + flag);
}

std::string with_newline(std::string s) {
  if (s.empty() || s.back() != '\n') s += '\n';
  return s;
}

/// Flag values shared across subcommands. Settings-backed ones go through
/// the precedence chain; the rest are plain inputs.
struct Args {
  std::map<std::string, std::string> raw;  // settings flags, by name
  std::string config;
  std::string domain, task, task_id, record, truth, problem, plan, suite, out, fault;
  std::string mode = "satisficing", heuristic;
  std::string problem_name = "task";
  bool serial = false, timing = false;
};

cli::Settings settings_for(const CLI::App& app, const Args& a) {
  cli::Layer flags;
  for (const auto& name : cli::setting_names()) {
    if (auto* opt = app.get_option_no_throw("--" + name); opt && opt->count() > 0) flags[name] = a.raw.at(name);
  }
  std::string config_path = a.config;
  if (config_path.empty()) {
    if (const char* v = std::getenv("DUPLEX_CONFIG"); v && *v) config_path = v;
  }
  const cli::Layer file = config_path.empty() ? cli::Layer{} : cli::load_config_file(config_path);
  const cli::Layer env = cli::environment_layer([](const char* n) { return std::getenv(n); });
  return cli::resolve(file, env, flags);
}

DomainInput load_domain(const std::string& path) {
  require(path, "--domain");
  return DomainInput::from_text(read_input(path));
}

pddl::ProblemSpec load_problem(const std::string& path, const pddl::Domain& domain) {
  require(path, "--problem");
  return pddl::parse_problem(read_input(path), domain);
}

ExtractionTask load_task(const Args& a) {
  require(a.task, "--task");
  std::string id = a.task_id;
  if (id.empty()) id = a.task == "-" ? "task" : fs::path(a.task).stem().string();
  return ExtractionTask{id, read_input(a.task)};
}

EndpointConfig endpoint(const char* prefix, const cli::Settings& s) {
  auto e = EndpointConfig::from_environment(prefix);
  e.timeout = std::chrono::milliseconds(static_cast<long long>(s.llm_budget * 1000));
  return e;
}

/// Scripted from --record when given, the live endpoint otherwise; wrapped
/// in fault injection when --fault is set.
std::shared_ptr<const Extractor> make_extractor(const Args& a, const ExtractionTask& task, const cli::Settings& s) {
  std::shared_ptr<const Extractor> ex;
  if (!a.record.empty()) {
    ex = std::make_shared<ScriptedExtractor>(std::map<std::string, std::string>{{task.id, read_input(a.record)}});
  } else {
    ex = std::make_shared<LiveExtractor>(endpoint("EXTRACTOR", s));
  }
  if (!a.fault.empty()) {
    const auto kind = fault_kind_from_string(a.fault);
    if (!kind) throw UsageError("unknown fault kind '" + a.fault + "'");
    ex = std::make_shared<FaultInjectingExtractor>(ex, *kind, s.seed);
  }
  return ex;
}

planning::SearchConfig search_config(const Args& a) {
  planning::SearchConfig c;
  if (a.mode == "optimal") {
    c = planning::SearchConfig::optimal();
  } else if (a.mode != "satisficing") {
    throw UsageError("--mode: expected satisficing or optimal");
  }
  if (!a.heuristic.empty()) {
    const auto h = planning::heuristic_from_string(a.heuristic);
    if (!h) throw UsageError("unknown heuristic '" + a.heuristic + "'");
    c.heuristic = *h;
  }
  return c;
}

// --- subcommands -----------------------------------------------------------

int cmd_parse_domain(const Args& a, const cli::Settings& s) {
  const auto d = load_domain(a.domain).domain;
  if (s.format == ReportFormat::Machine) {
    nlohmann::ordered_json j;
    j["name"] = d.name;
    j["requirements"] = d.requirements;
    j["types"] = nlohmann::ordered_json::object();
    for (const auto& t : d.types.names()) j["types"][t] = d.types.parent(t);
    j["constants"] = nlohmann::ordered_json::array();
    for (const auto& c : d.constants) j["constants"].push_back({{"name", c.name}, {"type", c.type}});
    j["predicates"] = nlohmann::ordered_json::array();
    for (const auto& p : d.predicates) j["predicates"].push_back({{"name", p.name}, {"arity", p.params.size()}});
    j["actions"] = nlohmann::ordered_json::array();
    for (const auto& act : d.actions) j["actions"].push_back({{"name", act.name}, {"arity", act.params.size()}});
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "domain      " << d.name << '\n'
            << "types       " << d.types.names().size() << '\n'
            << "constants   " << d.constants.size() << '\n'
            << "predicates  " << d.predicates.size() << '\n'
            << "actions     " << d.actions.size() << '\n';
  for (const auto& act : d.actions) std::cout << "  " << act.name << '/' << act.params.size() << '\n';
  return 0;
}

int cmd_derive_schema(const Args& a, const cli::Settings&) {
  std::cout << with_newline(load_domain(a.domain).guide);
  return 0;
}

int cmd_extract(const Args& a, const cli::Settings& s) {
  const auto d = load_domain(a.domain);
  const auto task = load_task(a);
  const auto wire = make_extractor(a, task, s)->extract(task, d.guide);
  std::cout << with_newline(serialize_record(parse_record(wire)));
  return 0;
}

int cmd_validate(const Args& a, const cli::Settings&) {
  const auto d = load_domain(a.domain);
  require(a.record, "--record");
  const auto record = parse_record(read_input(a.record));
  ValidationReport report = validate_level1(record, d.schema);
  if (report.verdict != Verdict::FailL1) {
    const auto l2 = validate_level2(report.corrected_record.value_or(record), d.schema);
    report.issues.insert(report.issues.end(), l2.issues.begin(), l2.issues.end());
    if (l2.verdict == Verdict::FailL2) report.verdict = Verdict::FailL2;
  }
  std::cout << with_newline(serialize_report(report));
  return report.verdict == Verdict::Pass || report.verdict == Verdict::Corrected ? 0 : 1;
}

int cmd_map(const Args& a, const cli::Settings&) {
  const auto d = load_domain(a.domain);
  require(a.record, "--record");
  std::cout << with_newline(map_and_render(parse_record(read_input(a.record)), d.domain, a.problem_name));
  return 0;
}

int cmd_plan(const Args& a, const cli::Settings& s) {
  const auto d = load_domain(a.domain);
  const auto problem = load_problem(a.problem, d.domain);
  auto cfg = cli::pipeline_config(s);
  cfg.search = search_config(a);
  const auto outcome = plan_with(d, problem, cfg);
  if (const auto* plan = planning::plan_of(outcome)) {
    std::cout << planning::format_plan(plan->steps);
    return 0;
  }
  const auto* diag = planning::diagnostic_of(outcome);
  std::cerr << to_string(diag->code) << ": " << diag->detail << '\n';
  return 1;
}

int cmd_validate_plan(const Args& a, const cli::Settings&) {
  const auto d = load_domain(a.domain);
  const auto problem = load_problem(a.problem, d.domain);
  require(a.plan, "--plan");
  const auto verdict = planning::validate_plan_text(d.domain, problem, read_input(a.plan));
  std::cout << with_newline(planning::serialize_verdict(verdict));
  return verdict.valid ? 0 : 1;
}

int cmd_solve(const Args& a, const cli::Settings& s) {
  const auto d = load_domain(a.domain);
  const auto task = load_task(a);
  auto cfg = cli::pipeline_config(s);
  cfg.search = search_config(a);
  cfg.extractor = make_extractor(a, task, s);
  const std::string truth = a.truth.empty() ? a.record : a.truth;
  if (!truth.empty()) {
    cfg.repair_agent = std::make_shared<OracleRepairAgent>(
        std::map<std::string, ExtractionRecord>{{task.id, parse_record(read_input(truth))}});
  } else {
    cfg.repair_agent = std::make_shared<LiveRepairAgent>(endpoint("REPAIR", s));
  }
  const RunRecord run = s.arm == Arm::Fast ? run_fast(task, d, cfg) : run_duplex(task, d, cfg);
  const std::string json = with_newline(serialize_run_record(run));
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / (task.id + ".run.json"), json);
    if (run.plan) write_file(fs::path(a.out) / (task.id + ".plan"), planning::format_plan(*run.plan));
  }
  if (s.format == ReportFormat::Machine) {
    std::cout << json;
  } else {
    std::cout << "task        " << run.task_id << '\n'
              << "status      " << (run.status == RunStatus::Solved ? "SOLVED" : "FAILED") << '\n'
              << "failure     " << to_string(run.failure) << '\n'
              << "halt        " << run.halt_reason << '\n'
              << "iterations  " << run.iterations.size() << '\n'
              << "repairs     " << run.repair_calls << '\n';
    if (run.plan) std::cout << planning::format_plan(*run.plan);
  }
  return run.status == RunStatus::Solved ? 0 : 1;
}

int cmd_bench(const Args& a, const cli::Settings& s) {
  require(a.suite, "--suite");
  const auto manifest = SuiteManifest::load(a.suite);
  auto cfg = cli::pipeline_config(s);
  cfg.search = search_config(a);
  SuiteOptions opts;
  opts.arm = s.arm;
  opts.base_seed = s.seed;
  opts.threads = s.threads;
  opts.include_timing = a.timing;
  const auto result = a.serial ? run_suite_serial(manifest, cfg, opts) : run_suite(manifest, cfg, opts);
  const std::string report = emit_report(result.report, s.format);
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    fs::create_directories(dir / "runs");
    write_file(dir / "report.json", emit_report(result.report, ReportFormat::Machine));
    std::size_t i = 0;
    for (const auto& e : manifest.entries) {
      for (int rep = 0; rep < e.repetitions; ++rep, ++i) {
        write_file(dir / "runs" / (e.task_id + "." + std::to_string(rep) + ".json"),
                   with_newline(serialize_run_record(result.runs[i])));
      }
    }
  }
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-guided extraction, validation and planning for natural-language tasks"};
  app.require_subcommand(1);
  Args a;
  for (const auto& name : cli::setting_names()) a.raw[name];

  auto settings_flags = [&a](CLI::App* sub) {
    sub->add_option("--config", a.config, "JSON config file (also DUPLEX_CONFIG)");
    sub->add_option("--arm", a.raw["arm"], "fast|duplex");
    sub->add_option("--max-iters", a.raw["max-iters"], "Reflection iterations");
    sub->add_option("--llm-budget", a.raw["llm-budget"], "Seconds per extractor or repair call");
    sub->add_option("--planner-budget", a.raw["planner-budget"], "Seconds per planner call");
    sub->add_option("--solver", a.raw["solver"], "internal|external");
    sub->add_option("--solver-cmd", a.raw["solver-cmd"], "Template with {domain} {problem} {plan_out}");
    sub->add_option("--seed", a.raw["seed"], "Fault seed offset");
    sub->add_option("--format", a.raw["format"], "table|machine");
    sub->add_option("--threads", a.raw["threads"], "Suite workers (0 = all cores)");
  };
  auto search_flags = [&a](CLI::App* sub) {
    sub->add_option("--mode", a.mode, "satisficing|optimal");
    sub->add_option("--heuristic", a.heuristic, "H_ADD|H_MAX|GOALCOUNT|BLIND");
  };

  using Handler = int (*)(const Args&, const cli::Settings&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    settings_flags(sub);
    commands.emplace_back(sub, h);
    return sub;
  };

  auto* parse_domain = add("parse-domain", "Parse a domain and summarize it", cmd_parse_domain);
  parse_domain->add_option("--domain", a.domain)->required();

  auto* derive = add("derive-schema", "Print the extraction guide for a domain", cmd_derive_schema);
  derive->add_option("--domain", a.domain)->required();

  auto* extract = add("extract", "Extract a record from a task description", cmd_extract);
  extract->add_option("--domain", a.domain)->required();
  extract->add_option("--task", a.task, "Task text file ('-' = stdin)")->required();
  extract->add_option("--task-id", a.task_id);
  extract->add_option("--record", a.record, "Scripted extractor output; live endpoint when absent");
  extract->add_option("--fault", a.fault, "Inject a fault of this kind");

  auto* validate = add("validate", "Run Level-1 and Level-2 checks on a record", cmd_validate);
  validate->add_option("--domain", a.domain)->required();
  validate->add_option("--record", a.record, "Record file ('-' = stdin)")->required();

  auto* map = add("map", "Render a record as a PDDL problem", cmd_map);
  map->add_option("--domain", a.domain)->required();
  map->add_option("--record", a.record, "Record file ('-' = stdin)")->required();
  map->add_option("--name", a.problem_name, "Problem name");

  auto* plan = add("plan", "Plan a PDDL problem", cmd_plan);
  plan->add_option("--domain", a.domain)->required();
  plan->add_option("--problem", a.problem)->required();
  search_flags(plan);

  auto* vplan = add("validate-plan", "Simulate a plan against a problem", cmd_validate_plan);
  vplan->add_option("--domain", a.domain)->required();
  vplan->add_option("--problem", a.problem)->required();
  vplan->add_option("--plan", a.plan, "Plan file ('-' = stdin)")->required();

  auto* solve = add("solve", "Run the full pipeline on one task", cmd_solve);
  solve->add_option("--domain", a.domain)->required();
  solve->add_option("--task", a.task)->required();
  solve->add_option("--task-id", a.task_id);
  solve->add_option("--record", a.record, "Scripted extractor output; live endpoint when absent");
  solve->add_option("--truth", a.truth, "Ground-truth record for the repair oracle (defaults to --record)");
  solve->add_option("--fault", a.fault);
  solve->add_option("--out", a.out, "Directory for the run record and plan");
  search_flags(solve);

  auto* bench = add("bench", "Run a task suite and report success rates", cmd_bench);
  bench->add_option("--suite", a.suite, "Suite manifest")->required();
  bench->add_option("--out", a.out, "Directory for the report and per-run records");
  bench->add_flag("--serial", a.serial, "Single-threaded reference runner");
  bench->add_flag("--timing", a.timing, "Include run-time percentiles");
  search_flags(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (const auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    try {
      return handler(a, settings_for(*sub, a));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}
