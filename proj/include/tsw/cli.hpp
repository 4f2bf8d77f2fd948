#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsw/flows.hpp"
#include "tsw/tree_ot.hpp"
#include "tsw/types.hpp"

namespace tsw {

// Command-line overrides for the core config fields.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

// Parses and executes a JSON experiment config (commands: distance, flow,
// bench, selftest). Writes the output CSV plus a `<out>.config.json` echo of
// the resolved config. Returns the process exit code: 0 success, 1 runtime
// failure, 2 config error (message names the offending field or parse
// location). Progress goes to `log`, diagnostics to `err`.
int run_config(const std::string& path, const CliOverrides& overrides,
               std::ostream& log, std::ostream& err);

struct BenchConfig {
  std::vector<FlowMethod> methods;
  std::vector<Index> sizes;  // n values
  std::vector<Index> dims;   // ambient d values
  int num_trees = 50;
  int lines_per_tree = 4;
  double radius = 0.5;
  SpatialMapConfig spatial_map;
  int repeats = 10;  // >= 3, median reported
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct BenchRecord {
  std::string method;
  Index n = 0;
  Index d = 0;
  int num_trees = 0;
  int lines_per_tree = 0;
  double r_or_gamma = 0.0;  // radius for circular modes, gamma for spatial
  double seconds_median = 0.0;
  std::uint64_t peak_rss_bytes = 0;
  bool skipped = false;  // allocation failure; timing fields are zero
};

// Times the distance estimators over the method x n x d grid on randomized
// measures: one discarded warmup, then `repeats` timed evaluations per cell
// (monotonic clock, median reported). Cells that fail to allocate are
// recorded as skipped.
std::vector<BenchRecord> bench_runtime(const BenchConfig& cfg);

// The spider closed form under test; injectable so the self-test can prove
// the oracle suite catches a broken implementation.
using SpiderFn =
    std::function<double(const ProjectedTreeMeasure&, const ProjectedTreeMeasure&)>;

struct SelftestSuite {
  std::string name;
  int trials = 0;
  bool passed = false;
  std::string detail;  // worst error or first failure description
};

struct SelftestReport {
  std::vector<SelftestSuite> suites;
  bool all_passed() const;
};

// Runs the invariant suites: closed form vs exact LP oracle, metric axioms,
// reductions (k=1 vs sliced, r=0 fast path), isometry/rotation invariance,
// analytic vs finite-difference gradients, assignment-based W2 vs brute
// force, and thread-count determinism. Properties hold for any seed.
SelftestReport run_selftest(std::uint64_t seed, const SpiderFn& spider = spider_w1);

}  // namespace tsw
