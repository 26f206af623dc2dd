// Serial vs OpenMP suite runner on a bundled manifest. Repetitions are
// scaled up so there is enough work per thread; reports must agree exactly.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"
#include "duplex/harness.hpp"

using namespace duplex;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double median_seconds(int trials, F&& run) {
  std::vector<double> t;
  for (int i = 0; i < trials; ++i) {
    const auto start = Clock::now();
    run();
    t.push_back(std::chrono::duration<double>(Clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"suite runner: serial reference vs OpenMP"};
  std::string suite = std::string(DUPLEX_DATA_DIR) + "/suites/ablation.json";
  int reps = 10, trials = 3, threads = 0;
  std::string arm_name = "duplex", heuristic = "H_ADD", mode = "satisficing";
  app.add_option("--suite", suite);
  app.add_option("--reps", reps, "repetitions per entry")->check(CLI::PositiveNumber);
  app.add_option("--trials", trials)->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "0 = all cores");
  app.add_option("--arm", arm_name);
  app.add_option("--mode", mode, "satisficing|optimal");
  app.add_option("--heuristic", heuristic);
  CLI11_PARSE(app, argc, argv);

  auto manifest = SuiteManifest::load(suite);
  for (auto& e : manifest.entries) e.repetitions = reps;

  PipelineConfig cfg;
  if (mode == "optimal") cfg.search = planning::SearchConfig::optimal();
  const auto h = planning::heuristic_from_string(heuristic);
  const auto arm = arm_from_string(arm_name);
  if (!h || !arm) {
    std::fprintf(stderr, "unknown heuristic or arm\n");
    return 2;
  }
  cfg.search.heuristic = *h;
  SuiteOptions opts;
  opts.arm = *arm;
  opts.threads = threads;
  const int workers = threads > 0 ? threads : omp_get_num_procs();

  SuiteResult serial, parallel;
  const double ts = median_seconds(trials, [&] { serial = run_suite_serial(manifest, cfg, opts); });
  const double tp = median_seconds(trials, [&] { parallel = run_suite(manifest, cfg, opts); });
  const bool same = serial.report == parallel.report;

  std::printf("suite=%s arm=%s runs=%d search=%s/%s\n", manifest.name.c_str(), arm_name.c_str(),
              serial.report.runs, mode.c_str(), heuristic.c_str());
  std::printf("%-10s %8s %10s %10s\n", "runner", "threads", "median_s", "runs/s");
  std::printf("%-10s %8d %10.4f %10.1f\n", "serial", 1, ts, serial.report.runs / ts);
  std::printf("%-10s %8d %10.4f %10.1f\n", "openmp", workers, tp, parallel.report.runs / tp);
  std::printf("speedup %.2fx, reports %s\n", ts / tp, same ? "identical" : "DIFFER");
  return same ? 0 : 1;
}
