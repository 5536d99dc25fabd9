#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "retmap/runner.hpp"
#include "retmap/scenario.hpp"
#include "retmap/version.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> scenario_dirs() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("RETMAP_SCENARIO_DIR"); env && *env) dirs.emplace_back(env);
  dirs.emplace_back(RETMAP_INSTALLED_SCENARIO_DIR);
  dirs.emplace_back(RETMAP_SOURCE_SCENARIO_DIR);
  return dirs;
}

// A path to an existing file, or the name of a bundled scenario.
fs::path resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  for (const auto& dir : scenario_dirs()) {
    const fs::path candidate = dir / (arg + ".scn");
    if (fs::exists(candidate)) return candidate;
  }
  return arg;
}

int list_scenarios() {
  for (const auto& dir : scenario_dirs()) {
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".scn") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::string task = "?";
      try {
        task = retmap::Scenario::load(f).get_string("task", "?");
      } catch (const retmap::ScenarioParseError&) {
      }
      std::cout << fmt::format("{:<32} {:<16} {}\n", f.stem().string(), task, f.string());
    }
    return 0;
  }
  std::cerr << "no scenario directory found\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Return-map laboratory: scenario runner"};
  app.set_version_flag("--version", std::string(retmap::kVersion));
  app.require_subcommand(1);

  std::string scenario_arg;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto* run = app.add_subcommand("run", "Run a scenario file or a bundled scenario by name");
  run->add_option("scenario", scenario_arg, "Scenario file or bundled name")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Override rng_seed");
  auto* threads_opt = run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("list-scenarios", "List bundled scenarios");

  std::string validate_arg;
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
  validate->add_option("scenario", validate_arg, "Scenario file or bundled name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (app.got_subcommand("list-scenarios")) return list_scenarios();

  if (app.got_subcommand("validate")) {
    const fs::path path = resolve_scenario(validate_arg);
    try {
      const retmap::Scenario s = retmap::Scenario::load(path);
      retmap::validate_scenario(s);
      std::cout << fmt::format("{}: ok ({}, task {})\n", path.string(), s.name(), s.task());
      return retmap::kExitOk;
    } catch (const retmap::ScenarioParseError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return retmap::kExitParse;
    }
  }

  retmap::RunOptions options;
  if (*out_opt) options.out_dir = fs::path(out_dir);
  if (*seed_opt) options.seed = seed;
  if (*threads_opt) options.threads = threads;
  const fs::path path = resolve_scenario(scenario_arg);
  const retmap::RunResult result = retmap::run_scenario_file(path, options, std::cout);
  if (result.exit_code != retmap::kExitOk) {
    std::cerr << "error: " << result.diagnostic << '\n';
    return result.exit_code;
  }
  std::cout << fmt::format("wrote {} files to {}\n", result.files.size(), result.out_dir.string());
  return retmap::kExitOk;
}
