#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "duplex/planner.hpp"

extern char** environ;

namespace duplex::planning {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Scratch directory removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("duplex-solver-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

PlannerOutcome solve_external(const fs::path& domain_path, const fs::path& problem_path,
                              const ExternalSolverConfig& config, std::chrono::milliseconds budget) {
  const auto start = Clock::now();
  ScratchDir scratch;
  const fs::path plan_out = scratch.path() / "plan.txt";
  const fs::path err_out = scratch.path() / "stderr.txt";

  std::string command = config.command_template;
  command = substitute(command, "{domain}", shell_quote(fs::absolute(domain_path).string()));
  command = substitute(command, "{problem}", shell_quote(fs::absolute(problem_path).string()));
  command = substitute(command, "{plan_out}", shell_quote(plan_out.string()));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  // Own process group so a timeout can kill the whole solver tree.
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, const_cast<char**>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) throw ProcessError(std::string("cannot spawn /bin/sh: ") + std::strerror(rc));

  SearchStats stats;
  int status = 0;
  bool killed = false;
  const auto deadline = start + budget;
  for (auto delay = std::chrono::microseconds(200);; delay = std::min(delay * 2, std::chrono::microseconds(5000))) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw ProcessError(std::string("waitpid failed: ") + std::strerror(errno));
    const auto now = Clock::now();
    if (now >= deadline) {
      ::kill(-pid, SIGKILL);
      killed = true;
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      break;
    }
    std::this_thread::sleep_for(std::min<Clock::duration>(delay, deadline - now));
  }
  stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();

  if (killed) return PlannerDiagnostic{DiagnosticCode::Timeout, "solver killed after the time budget", stats};
  if (!WIFEXITED(status)) {
    return PlannerDiagnostic{DiagnosticCode::ParseFail,
                             "solver terminated by signal " + std::to_string(WTERMSIG(status)), stats};
  }
  const int code = WEXITSTATUS(status);
  const std::string err = slurp(err_out);
  if (code == 127) throw ProcessError("solver command not found: " + err);
  if (code == 0) {
    if (!fs::exists(plan_out)) {
      return PlannerDiagnostic{DiagnosticCode::ParseFail, "solver exited 0 without writing a plan", stats};
    }
    try {
      Plan plan;
      plan.steps = parse_plan(slurp(plan_out));
      plan.cost = static_cast<int>(plan.steps.size());
      plan.stats = stats;
      return plan;
    } catch (const PlanFormatError& e) {
      return PlannerDiagnostic{DiagnosticCode::ParseFail, e.what(), stats};
    }
  }
  auto has = [code](const std::vector<int>& codes) { return std::find(codes.begin(), codes.end(), code) != codes.end(); };
  if (has(config.unsolvable_exit_codes)) {
    return PlannerDiagnostic{DiagnosticCode::SearchFail, "solver reported the task unsolvable (exit " +
                                                             std::to_string(code) + ")", stats};
  }
  if (has(config.timeout_exit_codes)) {
    return PlannerDiagnostic{DiagnosticCode::Timeout, "solver reported a timeout (exit " + std::to_string(code) + ")",
                             stats};
  }
  return PlannerDiagnostic{DiagnosticCode::ParseFail, "solver exit " + std::to_string(code) + ": " + err, stats};
}

}  // namespace duplex::planning
