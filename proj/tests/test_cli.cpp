#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tsw/cli.hpp"
#include "tsw/tree_ot.hpp"

using namespace tsw;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "tsw_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = temp_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunResult {
  int code = -1;
  std::string log;
  std::string err;
};

RunResult run(const std::string& name, const std::string& config_text,
              const CliOverrides& overrides = {}) {
  const std::string path = write_temp(name, config_text);
  std::ostringstream log, err;
  RunResult result;
  result.code = run_config(path, overrides, log, err);
  result.log = log.str();
  result.err = err.str();
  return result;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

const char* kInlineDistance = R"({
  "command": "distance",
  "seed": 11,
  "out": "%OUT%",
  "distance": {
    "method": "circular",
    "num_trees": 10,
    "radius": 0.4,
    "mu": {"points": [[0.0, 0.0], [1.0, 0.5], [0.2, -1.0]]},
    "nu": {"points": [[0.5, 0.1], [-0.3, 0.8], [1.1, 1.2]]}
  }
})";

std::string with_out(std::string text, const std::string& out) {
  const auto pos = text.find("%OUT%");
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, 5, out);
}

}  // namespace

TEST_CASE("minimal inline distance config writes a one-row csv") {
  const std::string out = (temp_dir() / "dist_min.csv").string();
  const RunResult r = run("dist_min.json", with_out(kInlineDistance, out));
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const std::vector<std::string> lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].rfind("# schema=tsw.distance.v1 config={", 0) == 0);
  CHECK(lines[1] == "method,value");
  CHECK(lines[2].rfind("circular,", 0) == 0);
  const double value = std::stod(lines[2].substr(9));
  CHECK(value >= 0.0);
  CHECK(std::filesystem::exists(out + ".config.json"));
}

TEST_CASE("rerun is byte-identical across thread counts and out paths") {
  const std::string out_a = (temp_dir() / "dist_a.csv").string();
  const std::string out_b = (temp_dir() / "dist_b.csv").string();
  CliOverrides single;
  single.threads = 1;
  CliOverrides many;
  many.threads = 4;
  many.out = out_b;
  const RunResult ra = run("dist_rerun.json", with_out(kInlineDistance, out_a), single);
  const RunResult rb = run("dist_rerun.json", with_out(kInlineDistance, out_a), many);
  CHECK(ra.code == 0);
  CHECK(rb.code == 0);
  CHECK(slurp(out_a) == slurp(out_b));
  CHECK(slurp(out_a + ".config.json") == slurp(out_b + ".config.json"));
}

TEST_CASE("flow command writes metric csv plus timing sidecar") {
  const char* text = R"({
    "command": "flow",
    "seed": 5,
    "out": "%OUT%",
    "flow": {
      "method": "db_linear",
      "learning_rate": 0.01,
      "iterations": 40,
      "checkpoints": [10, 40],
      "target": {"dataset": "gaussians8", "n": 24},
      "distance": {"num_trees": 3, "lines_per_tree": 2}
    }
  })";
  const std::string out_a = (temp_dir() / "flow_a.csv").string();
  const std::string out_b = (temp_dir() / "flow_b.csv").string();
  CliOverrides alt;
  alt.threads = 3;
  alt.out = out_b;
  const RunResult ra = run("flow.json", with_out(text, out_a));
  const RunResult rb = run("flow.json", with_out(text, out_a), alt);
  CHECK(ra.code == 0);
  CHECK(rb.code == 0);

  const std::vector<std::string> lines = lines_of(slurp(out_a));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("# schema=tsw.flow.v1 config={", 0) == 0);
  CHECK(lines[1] == "iteration,metric");
  CHECK(lines[2].rfind("10,", 0) == 0);
  CHECK(lines[3].rfind("40,", 0) == 0);
  CHECK(slurp(out_a) == slurp(out_b));  // timing lives in the sidecar

  const std::vector<std::string> timing = lines_of(slurp(out_a + ".timing.csv"));
  REQUIRE(timing.size() == 4);
  CHECK(timing[0].rfind("# schema=tsw.flow_timing.v1 config={", 0) == 0);
  CHECK(timing[1] == "iteration,seconds_per_iter");
}

TEST_CASE("bench command writes one ok row per grid cell") {
  const char* text = R"({
    "command": "bench",
    "seed": 2,
    "out": "%OUT%",
    "bench": {
      "methods": ["db_linear", "circular_r0"],
      "sizes": [64],
      "dims": [3],
      "num_trees": 2,
      "lines_per_tree": 2,
      "repeats": 3
    }
  })";
  const std::string out = (temp_dir() / "bench.csv").string();
  const RunResult r = run("bench.json", with_out(text, out));
  CHECK(r.code == 0);
  const std::vector<std::string> lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("# schema=tsw.bench.v1 config={", 0) == 0);
  CHECK(lines[1] ==
        "method,n,d,num_trees,lines_per_tree,r_or_gamma,"
        "seconds_median,peak_rss_bytes,status");
  CHECK(lines[2].rfind("db_linear,64,3,", 0) == 0);
  CHECK(lines[3].rfind("circular_r0,64,3,", 0) == 0);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    CHECK(lines[i].substr(lines[i].rfind(',') + 1) == "ok");
  }
}

TEST_CASE("config errors exit 2 and name the offending field") {
  SUBCASE("even spatial degree") {
    const char* text = R"({
      "command": "distance", "out": "/tmp/x.csv",
      "distance": {
        "method": "spatial",
        "spatial_map": {"kind": "odd_poly", "degree": 4},
        "mu": {"points": [[0, 0]]}, "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("bad_degree.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("degree") != std::string::npos);
    CHECK(r.err.find("$.distance.spatial_map") != std::string::npos);
  }
  SUBCASE("unknown key is rejected with its path") {
    const char* text = R"({
      "command": "distance", "out": "/tmp/x.csv",
      "distance": {
        "method": "circular", "radiu": 0.5,
        "mu": {"points": [[0, 0]]}, "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("bad_key.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.distance.radiu") != std::string::npos);
    CHECK(r.err.find("unknown key") != std::string::npos);
  }
  SUBCASE("unknown method") {
    const char* text = R"({
      "command": "distance", "out": "/tmp/x.csv",
      "distance": {
        "method": "tsw",
        "mu": {"points": [[0, 0]]}, "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("bad_method.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.distance.method") != std::string::npos);
  }
  SUBCASE("unknown dataset name") {
    const char* text = R"({
      "command": "distance", "out": "/tmp/x.csv",
      "distance": {
        "method": "db_linear",
        "mu": {"dataset": "spiral", "n": 16},
        "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("bad_dataset.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.distance.mu.dataset") != std::string::npos);
  }
  SUBCASE("checkpoints beyond iterations") {
    const char* text = R"({
      "command": "flow", "out": "/tmp/x.csv",
      "flow": {
        "method": "db_linear", "iterations": 5, "checkpoints": [9],
        "target": {"dataset": "gaussians8", "n": 8}
      }
    })";
    const RunResult r = run("bad_checkpoints.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.flow") != std::string::npos);
  }
  SUBCASE("missing out for a writing command") {
    const char* text = R"({
      "command": "distance",
      "distance": {
        "method": "db_linear",
        "mu": {"points": [[0, 0]]}, "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("no_out.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.out") != std::string::npos);
  }
  SUBCASE("negative seed") {
    const char* text = R"({
      "command": "distance", "seed": -3, "out": "/tmp/x.csv",
      "distance": {
        "method": "db_linear",
        "mu": {"points": [[0, 0]]}, "nu": {"points": [[1, 1]]}
      }
    })";
    const RunResult r = run("bad_seed.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("$.seed") != std::string::npos);
  }
  SUBCASE("malformed json reports a parse location") {
    const RunResult r = run("truncated.json", "{\"command\": \"distance\",\n");
    CHECK(r.code == 2);
    CHECK(r.err.find("line") != std::string::npos);
  }
  SUBCASE("unreadable path") {
    std::ostringstream log, err;
    const int code =
        run_config((temp_dir() / "missing.json").string(), {}, log, err);
    CHECK(code == 2);
    CHECK(err.str().find("cannot open") != std::string::npos);
  }
  SUBCASE("spherical method rejects euclidean measures") {
    const char* text = R"({
      "command": "distance", "out": "/tmp/x.csv",
      "distance": {
        "method": "stsw",
        "mu": {"points": [[0, 0, 1]]}, "nu": {"points": [[1, 1, 1]]}
      }
    })";
    const RunResult r = run("bad_sphere.json", text);
    CHECK(r.code == 2);
    CHECK(r.err.find("spherical") != std::string::npos);
  }
}

TEST_CASE("seed override is reflected in the config echo") {
  const std::string out = (temp_dir() / "dist_seed.csv").string();
  CliOverrides ov;
  ov.seed = 9;
  const RunResult r = run("dist_seed.json", with_out(kInlineDistance, out), ov);
  CHECK(r.code == 0);
  const std::string first = lines_of(slurp(out))[0];
  CHECK(first.find("\"seed\":9") != std::string::npos);
}

TEST_CASE("dataset measures run end to end") {
  const char* text = R"({
    "command": "distance", "seed": 4, "out": "%OUT%",
    "distance": {
      "method": "spatial_stsw",
      "num_trees": 6,
      "lines_per_tree": 3,
      "mu": {"dataset": "vmf12", "n": 36},
      "nu": {"dataset": "vmf12", "n": 24, "kappa": 5.0}
    }
  })";
  const std::string out = (temp_dir() / "dist_vmf.csv").string();
  const RunResult r = run("dist_vmf.json", with_out(text, out));
  CHECK(r.code == 0);
  const std::vector<std::string> lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 3);
  const double value = std::stod(lines[2].substr(lines[2].find(',') + 1));
  CHECK(value > 0.0);
}

TEST_CASE("selftest command prints the suite table and writes csv") {
  const char* text = R"({"command": "selftest", "seed": 3, "out": "%OUT%"})";
  const std::string out = (temp_dir() / "selftest.csv").string();
  const RunResult r = run("selftest.json", with_out(text, out));
  CHECK(r.code == 0);
  CHECK(r.log.find("oracle_equivalence") != std::string::npos);
  CHECK(r.log.find("FAIL") == std::string::npos);
  const std::vector<std::string> lines = lines_of(slurp(out));
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0].rfind("# schema=tsw.selftest.v1 config={", 0) == 0);
  CHECK(lines[1] == "suite,trials,status");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    CHECK(lines[i].substr(lines[i].rfind(',') + 1) == "pass");
  }
}

TEST_CASE("selftest oracle suite catches a broken closed form") {
  const SpiderFn broken = [](const ProjectedTreeMeasure& a,
                             const ProjectedTreeMeasure& b) {
    return 1.01 * spider_w1(a, b);
  };
  const SelftestReport report = run_selftest(17, broken);
  CHECK_FALSE(report.all_passed());
  for (const SelftestSuite& suite : report.suites) {
    if (suite.name == "oracle_equivalence") {
      CHECK_FALSE(suite.passed);
    } else {
      CHECK_MESSAGE(suite.passed, suite.name, ": ", suite.detail);
    }
  }
}

TEST_CASE("selftest pass set does not depend on the seed") {
  for (const std::uint64_t seed : {1ULL, 99ULL, 424242ULL}) {
    const SelftestReport report = run_selftest(seed);
    CHECK_MESSAGE(report.all_passed(), "seed ", seed);
    REQUIRE(report.suites.size() == 7);
  }
}
