#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tsw/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tree-sliced Wasserstein distances: experiment runner"};
  std::string config_path;
  app.add_option("config", config_path, "JSON experiment config")->required();
  tsw::CliOverrides overrides;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override config seed");
  auto* out_opt = app.add_option("--out", out, "override output CSV path");
  auto* threads_opt =
      app.add_option("--threads", threads, "override thread count");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (*seed_opt) overrides.seed = seed;
  if (*out_opt) overrides.out = out;
  if (*threads_opt) overrides.threads = threads;
  return tsw::run_config(config_path, overrides, std::cout, std::cerr);
}
