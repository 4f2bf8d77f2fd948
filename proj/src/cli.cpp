#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <climits>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <new>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsw/cli.hpp"
#include "tsw/distances.hpp"
#include "tsw/flows.hpp"
#include "tsw/rng.hpp"
#include "tsw/types.hpp"

namespace tsw {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing: strict key checking with field-anchored error messages.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& node, const std::string& where,
                const std::vector<const char*>& allowed) {
  for (const auto& item : node.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* key) { return item.key() == key; });
    if (!known) fail(where + "." + item.key(), "unknown key");
  }
}

const json* find(const json& node, const char* key) {
  const auto it = node.find(key);
  return it == node.end() ? nullptr : &*it;
}

const json& member(const json& node, const std::string& where,
                   const char* key) {
  const json* v = find(node, key);
  if (!v) fail(where + "." + key, "missing required key");
  return *v;
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  const auto raw = v.get<std::int64_t>();
  if (raw < INT_MIN || raw > INT_MAX) fail(where, "integer out of range");
  return int(raw);
}

std::string get_string(const json& node, const std::string& where,
                       const char* key) {
  return as_string(member(node, where, key), where + "." + key);
}

double get_double(const json& node, const std::string& where, const char* key,
                  double fallback) {
  const json* v = find(node, key);
  return v ? as_double(*v, where + "." + key) : fallback;
}

int get_int(const json& node, const std::string& where, const char* key) {
  return as_int(member(node, where, key), where + "." + key);
}

int get_int(const json& node, const std::string& where, const char* key,
            int fallback) {
  const json* v = find(node, key);
  return v ? as_int(*v, where + "." + key) : fallback;
}

bool get_bool(const json& node, const std::string& where, const char* key,
              bool fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(where + "." + key, "expected a boolean");
  return v->get<bool>();
}

std::uint64_t get_u64(const json& node, const std::string& where,
                      const char* key, std::uint64_t fallback) {
  const json* v = find(node, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned()) {
    fail(where + "." + key, "expected a nonnegative integer");
  }
  return v->get<std::uint64_t>();
}

std::vector<int> as_int_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array");
  std::vector<int> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_int(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Matrix as_points(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) {
    fail(where, "expected a non-empty array of rows");
  }
  const json& first = v[0];
  if (!first.is_array() || first.empty()) {
    fail(where + "[0]", "expected a non-empty array of numbers");
  }
  Matrix pts(Index(v.size()), Index(first.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string row_where = where + "[" + std::to_string(i) + "]";
    const json& row = v[i];
    if (!row.is_array() || row.size() != first.size()) {
      fail(row_where, "rows must have equal length");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      pts(Index(i), Index(j)) =
          as_double(row[j], row_where + "[" + std::to_string(j) + "]");
    }
  }
  return pts;
}

// A measure is either inline points (+ optional weights) or a named dataset;
// datasets are generated at execution time from the command seed.
struct MeasureSpec {
  std::optional<DiscreteMeasure> inline_measure;
  std::string dataset;
  Index n = 0;
  double kappa = 50.0;

  bool spherical() const {
    return inline_measure ? inline_measure->spherical : dataset == "vmf12";
  }
  Index dim() const {
    if (inline_measure) return inline_measure->dim();
    return dataset == "vmf12" ? 3 : 2;
  }
  Index size() const { return inline_measure ? inline_measure->size() : n; }
  DiscreteMeasure realize(std::uint64_t seed) const {
    if (inline_measure) return *inline_measure;
    Rng rng(seed);
    return make_dataset(dataset, n, rng, kappa);
  }
};

MeasureSpec parse_measure(const json& node, const std::string& where) {
  if (!node.is_object()) fail(where, "expected an object");
  MeasureSpec spec;
  if (node.contains("points")) {
    check_keys(node, where, {"points", "weights", "spherical"});
    Matrix pts = as_points(node.at("points"), where + ".points");
    const bool sphere = get_bool(node, where, "spherical", false);
    try {
      if (const json* w = find(node, "weights")) {
        if (!w->is_array()) fail(where + ".weights", "expected an array");
        Vector weights(Index(w->size()));
        for (std::size_t i = 0; i < w->size(); ++i) {
          weights[Index(i)] = as_double(
              (*w)[i], where + ".weights[" + std::to_string(i) + "]");
        }
        spec.inline_measure.emplace(std::move(pts), std::move(weights), sphere);
      } else {
        spec.inline_measure = DiscreteMeasure::uniform(std::move(pts), sphere);
      }
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    return spec;
  }
  check_keys(node, where, {"dataset", "n", "kappa"});
  spec.dataset = get_string(node, where, "dataset");
  const auto& names = dataset_names();
  if (std::find(names.begin(), names.end(), spec.dataset) == names.end()) {
    fail(where + ".dataset", "unknown dataset '" + spec.dataset + "'");
  }
  spec.n = get_int(node, where, "n");
  if (spec.n < 1) fail(where + ".n", "must be >= 1");
  spec.kappa = get_double(node, where, "kappa", spec.kappa);
  if (spec.kappa < 0.0) fail(where + ".kappa", "must be >= 0");
  return spec;
}

SpatialMapConfig parse_spatial_map(const json& node, const std::string& where) {
  if (!node.is_object()) fail(where, "expected an object");
  check_keys(node, where, {"kind", "degree", "gamma"});
  SpatialMapConfig cfg;
  const std::string kind = get_string(node, where, "kind");
  if (kind == "identity") {
    cfg.kind = SpatialMapConfig::Kind::Identity;
  } else if (kind == "odd_poly") {
    cfg.kind = SpatialMapConfig::Kind::OddPoly;
  } else {
    fail(where + ".kind", "expected 'identity' or 'odd_poly'");
  }
  cfg.degree = get_int(node, where, "degree", cfg.degree);
  cfg.gamma = get_double(node, where, "gamma", cfg.gamma);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return cfg;
}

SpatialMapConfig default_odd_poly() {
  SpatialMapConfig cfg;
  cfg.kind = SpatialMapConfig::Kind::OddPoly;
  cfg.degree = 3;
  cfg.gamma = 1.0;
  return cfg;
}

std::vector<const char*> distance_keys(
    std::initializer_list<const char*> extra = {}) {
  std::vector<const char*> keys = {
      "num_trees",      "lines_per_tree",   "radius",
      "root_std",       "direction_scheme", "splitting_sign",
      "splitting_temperature", "spatial_map"};
  keys.insert(keys.end(), extra.begin(), extra.end());
  return keys;
}

DistanceConfig parse_distance_config(const json& node,
                                     const std::string& where) {
  DistanceConfig cfg;
  cfg.num_trees = get_int(node, where, "num_trees", cfg.num_trees);
  cfg.lines_per_tree =
      get_int(node, where, "lines_per_tree", cfg.lines_per_tree);
  cfg.radius = get_double(node, where, "radius", cfg.radius);
  cfg.root_std = get_double(node, where, "root_std", cfg.root_std);
  if (const json* v = find(node, "direction_scheme")) {
    const std::string scheme = as_string(*v, where + ".direction_scheme");
    if (scheme == "iid_uniform") {
      cfg.scheme = DirectionScheme::IidUniform;
    } else if (scheme == "orthogonal") {
      cfg.scheme = DirectionScheme::Orthogonal;
    } else {
      fail(where + ".direction_scheme",
           "expected 'iid_uniform' or 'orthogonal'");
    }
  }
  cfg.splitting_sign =
      get_double(node, where, "splitting_sign", cfg.splitting_sign);
  cfg.splitting_temperature = get_double(node, where, "splitting_temperature",
                                         cfg.splitting_temperature);
  if (const json* v = find(node, "spatial_map")) {
    cfg.spatial_map = parse_spatial_map(*v, where + ".spatial_map");
  }
  return cfg;
}

TswMode tsw_mode_of(FlowMethod method) {
  switch (method) {
    case FlowMethod::DbLinear:
      return TswMode::DbLinear;
    case FlowMethod::Spatial:
      return TswMode::Spatial;
    case FlowMethod::Circular:
      return TswMode::Circular;
    case FlowMethod::CircularR0:
      return TswMode::CircularR0;
    default:
      throw std::invalid_argument("method has no euclidean tree mode");
  }
}

StswMode stsw_mode_of(FlowMethod method) {
  return method == FlowMethod::StswSpatial ? StswMode::Spatial
                                           : StswMode::Plain;
}

// ---------------------------------------------------------------------------
// CSV emission. Doubles use %.17g so reruns are byte-comparable.

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string csv_content(const std::string& schema, const json& echo,
                        const std::string& header,
                        const std::vector<std::string>& rows) {
  std::string text = "# schema=" + schema + " config=" + echo.dump() + "\n";
  text += header;
  text += '\n';
  for (const std::string& row : rows) {
    text += row;
    text += '\n';
  }
  return text;
}

void emit_csv(const std::string& out, const std::string& schema,
              const json& echo, const std::string& header,
              const std::vector<std::string>& rows) {
  write_file(out, csv_content(schema, echo, header, rows));
  write_file(out + ".config.json", echo.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Command builders: parse + validate now, return the execution closure.

using Executor = std::function<void()>;

Executor build_distance(const json& block, const json& echo,
                        const std::string& out, std::uint64_t seed,
                        int threads, std::ostream& log) {
  const std::string where = "$.distance";
  check_keys(block, where, distance_keys({"method", "mu", "nu"}));
  FlowMethod method;
  const std::string token = get_string(block, where, "method");
  try {
    method = parse_method(token);
  } catch (const std::invalid_argument&) {
    fail(where + ".method", "unknown method '" + token + "'");
  }
  const MeasureSpec mu = parse_measure(member(block, where, "mu"), where + ".mu");
  const MeasureSpec nu = parse_measure(member(block, where, "nu"), where + ".nu");
  if (mu.dim() != nu.dim()) fail(where, "mu and nu dimensions differ");
  if (method_is_spherical(method) && !(mu.spherical() && nu.spherical())) {
    fail(where, "method '" + std::string(method_token(method)) +
                    "' needs spherical measures (unit-norm points)");
  }
  DistanceConfig cfg = parse_distance_config(block, where);
  if (method == FlowMethod::Spatial && !block.contains("spatial_map")) {
    cfg.spatial_map = default_odd_poly();
  }
  cfg.seed = seed;
  try {
    cfg.validate(mu.dim());
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return [=, &log]() {
    const DiscreteMeasure a = mu.realize(substream_seed(seed, 11));
    const DiscreteMeasure b = nu.realize(substream_seed(seed, 12));
    double value = 0.0;
    if (method == FlowMethod::Sw) {
      value = estimate_sw(a, b, cfg.num_trees, cfg.seed, threads).value;
    } else if (method_is_spherical(method)) {
      value = estimate_stsw(a, b, cfg, stsw_mode_of(method), threads).value;
    } else {
      value = estimate_tsw(a, b, cfg, tsw_mode_of(method), threads).value;
    }
    emit_csv(out, "tsw.distance.v1", echo, "method,value",
             {std::string(method_token(method)) + "," + fmt_double(value)});
    log << method_token(method) << " value: " << fmt_double(value) << "\n";
    log << "wrote " << out << "\n";
  };
}

Executor build_flow(const json& block, const json& echo,
                    const std::string& out, std::uint64_t seed, int threads,
                    std::ostream& log) {
  const std::string where = "$.flow";
  check_keys(block, where,
             {"method", "learning_rate", "iterations", "optimizer", "beta1",
              "beta2", "eps", "checkpoints", "ground", "source_n", "target",
              "distance"});
  FlowConfig cfg;
  const std::string token = get_string(block, where, "method");
  try {
    cfg.method = parse_method(token);
  } catch (const std::invalid_argument&) {
    fail(where + ".method", "unknown method '" + token + "'");
  }
  const bool sphere = method_is_spherical(cfg.method);
  cfg.learning_rate =
      get_double(block, where, "learning_rate", cfg.learning_rate);
  cfg.iterations = get_int(block, where, "iterations", cfg.iterations);
  if (const json* v = find(block, "optimizer")) {
    const std::string name = as_string(*v, where + ".optimizer");
    if (name == "plain_sgd") {
      cfg.optimizer = FlowOptimizer::PlainSgd;
    } else if (name == "adaptive_moment") {
      cfg.optimizer = FlowOptimizer::AdaptiveMoment;
    } else {
      fail(where + ".optimizer", "expected 'plain_sgd' or 'adaptive_moment'");
    }
  }
  cfg.adaptive.beta1 = get_double(block, where, "beta1", cfg.adaptive.beta1);
  cfg.adaptive.beta2 = get_double(block, where, "beta2", cfg.adaptive.beta2);
  cfg.adaptive.eps = get_double(block, where, "eps", cfg.adaptive.eps);
  if (const json* v = find(block, "checkpoints")) {
    cfg.checkpoints = as_int_list(*v, where + ".checkpoints");
  } else {
    cfg.checkpoints = {cfg.iterations};
  }
  cfg.ground = sphere ? GroundMetric::Geodesic : GroundMetric::Euclidean;
  if (const json* v = find(block, "ground")) {
    const std::string name = as_string(*v, where + ".ground");
    if (name == "euclidean") {
      cfg.ground = GroundMetric::Euclidean;
    } else if (name == "geodesic") {
      cfg.ground = GroundMetric::Geodesic;
    } else {
      fail(where + ".ground", "expected 'euclidean' or 'geodesic'");
    }
  }
  const MeasureSpec target =
      parse_measure(member(block, where, "target"), where + ".target");
  if (sphere && !target.spherical()) {
    fail(where + ".target",
         "spherical method needs a spherical target (unit-norm points)");
  }
  const Index source_n =
      get_int(block, where, "source_n", int(target.size()));
  if (source_n < 1) fail(where + ".source_n", "must be >= 1");
  if (const json* v = find(block, "distance")) {
    if (!v->is_object()) fail(where + ".distance", "expected an object");
    check_keys(*v, where + ".distance", distance_keys());
    cfg.distance = parse_distance_config(*v, where + ".distance");
    if (cfg.method == FlowMethod::Spatial && !v->contains("spatial_map")) {
      cfg.distance.spatial_map = default_odd_poly();
    }
  } else if (cfg.method == FlowMethod::Spatial) {
    cfg.distance.spatial_map = default_odd_poly();
  }
  cfg.eval_seed = substream_seed(seed, 3);
  try {
    cfg.validate();
    cfg.distance.validate(target.dim());
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return [=, &log]() {
    const DiscreteMeasure goal = target.realize(substream_seed(seed, 1));
    Rng source_rng(substream_seed(seed, 2));
    const Matrix init =
        sphere ? uniform_sphere_cloud(source_n, goal.dim(), source_rng)
               : gaussian_cloud(source_n, goal.dim(), source_rng);
    const FlowTrace trace = sphere
                                ? run_flow_spherical(init, goal, cfg, threads)
                                : run_flow_euclidean(init, goal, cfg, threads);
    std::vector<std::string> rows;
    std::vector<std::string> timing_rows;
    rows.reserve(trace.rows.size());
    timing_rows.reserve(trace.rows.size());
    for (const FlowCheckpoint& cp : trace.rows) {
      rows.push_back(std::to_string(cp.iteration) + "," +
                     fmt_double(cp.metric));
      timing_rows.push_back(std::to_string(cp.iteration) + "," +
                            fmt_double(cp.seconds_per_iter));
    }
    emit_csv(out, "tsw.flow.v1", echo, "iteration,metric", rows);
    write_file(out + ".timing.csv",
               csv_content("tsw.flow_timing.v1", echo,
                           "iteration,seconds_per_iter", timing_rows));
    log << "final metric: " << fmt_double(trace.rows.back().metric) << "\n";
    log << "wrote " << out << "\n";
  };
}

Executor build_bench(const json& block, const json& echo,
                     const std::string& out, std::uint64_t seed, int threads,
                     std::ostream& log) {
  const std::string where = "$.bench";
  check_keys(block, where,
             {"methods", "sizes", "dims", "num_trees", "lines_per_tree",
              "radius", "spatial_map", "repeats"});
  BenchConfig cfg;
  const json& methods = member(block, where, "methods");
  if (!methods.is_array() || methods.empty()) {
    fail(where + ".methods", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string item_where =
        where + ".methods[" + std::to_string(i) + "]";
    const std::string token = as_string(methods[i], item_where);
    try {
      cfg.methods.push_back(parse_method(token));
    } catch (const std::invalid_argument&) {
      fail(item_where, "unknown method '" + token + "'");
    }
  }
  for (const int n : as_int_list(member(block, where, "sizes"),
                                 where + ".sizes")) {
    cfg.sizes.push_back(n);
  }
  for (const int d :
       as_int_list(member(block, where, "dims"), where + ".dims")) {
    cfg.dims.push_back(d);
  }
  cfg.num_trees = get_int(block, where, "num_trees", cfg.num_trees);
  cfg.lines_per_tree =
      get_int(block, where, "lines_per_tree", cfg.lines_per_tree);
  cfg.radius = get_double(block, where, "radius", cfg.radius);
  if (const json* v = find(block, "spatial_map")) {
    cfg.spatial_map = parse_spatial_map(*v, where + ".spatial_map");
  } else if (std::find(cfg.methods.begin(), cfg.methods.end(),
                       FlowMethod::Spatial) != cfg.methods.end()) {
    cfg.spatial_map = default_odd_poly();
  }
  cfg.repeats = get_int(block, where, "repeats", cfg.repeats);
  cfg.seed = seed;
  cfg.threads = threads;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return [=, &log]() {
    const std::vector<BenchRecord> records = bench_runtime(cfg);
    std::vector<std::string> rows;
    rows.reserve(records.size());
    for (const BenchRecord& rec : records) {
      rows.push_back(rec.method + "," + std::to_string(rec.n) + "," +
                     std::to_string(rec.d) + "," +
                     std::to_string(rec.num_trees) + "," +
                     std::to_string(rec.lines_per_tree) + "," +
                     fmt_double(rec.r_or_gamma) + "," +
                     fmt_double(rec.seconds_median) + "," +
                     std::to_string(rec.peak_rss_bytes) + "," +
                     (rec.skipped ? "skipped" : "ok"));
    }
    emit_csv(out, "tsw.bench.v1", echo,
             "method,n,d,num_trees,lines_per_tree,r_or_gamma,"
             "seconds_median,peak_rss_bytes,status",
             rows);
    log << "benchmarked " << records.size() << " cells\n";
    log << "wrote " << out << "\n";
  };
}

Executor build_selftest(const json& echo,
                        const std::optional<std::string>& out,
                        std::uint64_t seed, std::ostream& log) {
  return [=, &log]() {
    const SelftestReport report = run_selftest(seed);
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %7s  %-6s  %s", "suite", "trials",
                  "result", "detail");
    log << line << "\n";
    std::string failures;
    for (const SelftestSuite& suite : report.suites) {
      std::snprintf(line, sizeof line, "%-20s %7d  %-6s  %s",
                    suite.name.c_str(), suite.trials,
                    suite.passed ? "pass" : "FAIL", suite.detail.c_str());
      log << line << "\n";
      if (!suite.passed) {
        if (!failures.empty()) failures += ", ";
        failures += suite.name;
      }
    }
    if (out) {
      std::vector<std::string> rows;
      rows.reserve(report.suites.size());
      for (const SelftestSuite& suite : report.suites) {
        rows.push_back(suite.name + "," + std::to_string(suite.trials) + "," +
                       (suite.passed ? "pass" : "fail"));
      }
      emit_csv(*out, "tsw.selftest.v1", echo, "suite,trials,status", rows);
      log << "wrote " << *out << "\n";
    }
    if (!failures.empty()) {
      throw std::runtime_error("selftest failed: " + failures);
    }
  };
}

int resolve_threads(const json& root, std::ostream& err) {
  if (const json* v = find(root, "threads")) {
    const int threads = as_int(*v, "$.threads");
    if (threads < 1) fail("$.threads", "must be >= 1");
    return threads;
  }
  if (const char* env = std::getenv("TSW_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed >= 1 && parsed <= INT_MAX) {
      return int(parsed);
    }
    err << "warning: ignoring invalid TSW_THREADS value '" << env << "'\n";
  }
  return 1;
}

}  // namespace

int run_config(const std::string& path, const CliOverrides& overrides,
               std::ostream& log, std::ostream& err) {
  json root;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      err << "config error: " << path << ": cannot open file\n";
      return 2;
    }
    try {
      root = json::parse(in);
    } catch (const json::parse_error& e) {
      err << "config error: " << path << ": " << e.what() << "\n";
      return 2;
    }
  }
  Executor execute;
  try {
    if (!root.is_object()) fail("$", "top-level value must be an object");
    if (overrides.seed) root["seed"] = *overrides.seed;
    if (overrides.out) root["out"] = *overrides.out;
    if (overrides.threads) root["threads"] = *overrides.threads;

    const std::string command = get_string(root, "$", "command");
    const bool has_block =
        command == "distance" || command == "flow" || command == "bench";
    if (command != "selftest" && !has_block) {
      fail("$.command", "unknown command '" + command + "'");
    }
    if (has_block) {
      check_keys(root, "$",
                 {"command", "seed", "out", "threads", command.c_str()});
    } else {
      check_keys(root, "$", {"command", "seed", "out", "threads"});
    }

    const std::uint64_t seed = get_u64(root, "$", "seed", 0);
    const int threads = resolve_threads(root, err);
    std::optional<std::string> out;
    if (root.contains("out")) out = get_string(root, "$", "out");
    if (has_block && !out) {
      fail("$.out", "required for command '" + command + "'");
    }

    // The echo omits artifact plumbing (out path, thread count) so reruns of
    // the same experiment are byte-identical regardless of either.
    json echo = root;
    echo.erase("threads");
    echo.erase("out");
    if (!echo.contains("seed")) echo["seed"] = seed;

    if (command == "distance") {
      execute = build_distance(member(root, "$", "distance"), echo, *out,
                               seed, threads, log);
    } else if (command == "flow") {
      execute =
          build_flow(member(root, "$", "flow"), echo, *out, seed, threads, log);
    } else if (command == "bench") {
      execute = build_bench(member(root, "$", "bench"), echo, *out, seed,
                            threads, log);
    } else {
      execute = build_selftest(echo, out, seed, log);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << path << ": " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "config error: " << path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << path << ": " << e.what() << "\n";
    return 2;
  }
  try {
    execute();
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Benchmark harness.

void BenchConfig::validate() const {
  require(!methods.empty(), "bench: methods must be non-empty");
  require(!sizes.empty(), "bench: sizes must be non-empty");
  require(!dims.empty(), "bench: dims must be non-empty");
  for (const Index n : sizes) require(n >= 1, "bench: sizes must be >= 1");
  for (const Index d : dims) require(d >= 1, "bench: dims must be >= 1");
  require(num_trees >= 1, "bench: num_trees must be >= 1");
  require(lines_per_tree >= 1, "bench: lines_per_tree must be >= 1");
  require(radius >= 0.0, "bench: radius must be >= 0");
  require(repeats >= 3, "bench: repeats must be >= 3");
  require(threads >= 1, "bench: threads must be >= 1");
  spatial_map.validate();
  const bool any_spherical =
      std::any_of(methods.begin(), methods.end(), method_is_spherical);
  if (any_spherical) {
    for (const Index d : dims) {
      require(d >= 2, "bench: spherical methods need dims >= 2");
    }
  }
}

std::vector<BenchRecord> bench_runtime(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRecord> records;
  records.reserve(cfg.methods.size() * cfg.sizes.size() * cfg.dims.size());
  std::uint64_t cell = 0;
  for (const FlowMethod method : cfg.methods) {
    for (const Index n : cfg.sizes) {
      for (const Index d : cfg.dims) {
        ++cell;
        BenchRecord rec;
        rec.method = std::string(method_token(method));
        rec.n = n;
        rec.d = d;
        rec.num_trees = cfg.num_trees;
        rec.lines_per_tree =
            method == FlowMethod::Sw ? 1 : cfg.lines_per_tree;
        if (method == FlowMethod::Circular) {
          rec.r_or_gamma = cfg.radius;
        } else if (method == FlowMethod::Spatial &&
                   cfg.spatial_map.kind == SpatialMapConfig::Kind::OddPoly) {
          rec.r_or_gamma = cfg.spatial_map.gamma;
        }
        try {
          Rng rng(substream_seed(cfg.seed, cell));
          const bool sphere = method_is_spherical(method);
          const DiscreteMeasure mu = DiscreteMeasure::uniform(
              sphere ? uniform_sphere_cloud(n, d, rng)
                     : gaussian_cloud(n, d, rng),
              sphere);
          const DiscreteMeasure nu = DiscreteMeasure::uniform(
              sphere ? uniform_sphere_cloud(n, d, rng)
                     : gaussian_cloud(n, d, rng),
              sphere);
          DistanceConfig dc;
          dc.num_trees = cfg.num_trees;
          dc.lines_per_tree = cfg.lines_per_tree;
          dc.radius = method == FlowMethod::Circular ? cfg.radius : 0.0;
          if (method == FlowMethod::Spatial) dc.spatial_map = cfg.spatial_map;
          dc.seed = substream_seed(cfg.seed, cell + (std::uint64_t(1) << 32));
          const auto eval = [&]() -> double {
            if (method == FlowMethod::Sw) {
              return estimate_sw(mu, nu, cfg.num_trees, dc.seed, cfg.threads)
                  .value;
            }
            if (method_is_spherical(method)) {
              return estimate_stsw(mu, nu, dc, stsw_mode_of(method),
                                   cfg.threads)
                  .value;
            }
            return estimate_tsw(mu, nu, dc, tsw_mode_of(method), cfg.threads)
                .value;
          };
          volatile double sink = eval();  // warmup, result discarded
          std::vector<double> seconds(std::size_t(cfg.repeats));
          for (int r = 0; r < cfg.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            sink = eval();
            const auto t1 = std::chrono::steady_clock::now();
            seconds[std::size_t(r)] =
                std::chrono::duration<double>(t1 - t0).count();
          }
          (void)sink;
          std::sort(seconds.begin(), seconds.end());
          const std::size_t mid = seconds.size() / 2;
          rec.seconds_median = seconds.size() % 2 == 1
                                   ? seconds[mid]
                                   : 0.5 * (seconds[mid - 1] + seconds[mid]);
          rusage usage{};
          getrusage(RUSAGE_SELF, &usage);
          rec.peak_rss_bytes = std::uint64_t(usage.ru_maxrss) * 1024;
        } catch (const std::bad_alloc&) {
          rec.skipped = true;
          rec.seconds_median = 0.0;
          rec.peak_rss_bytes = 0;
        }
        records.push_back(rec);
      }
    }
  }
  return records;
}

}  // namespace tsw
