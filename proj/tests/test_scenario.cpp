#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "retmap/runner.hpp"
#include "retmap/scenario.hpp"

using namespace retmap;
namespace fs = std::filesystem;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return Scenario::parse(in, "test.scn");
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "retmap_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const fs::path kBundled{RETMAP_TEST_SCENARIO_DIR};

}  // namespace

TEST(Scenario, ParsesValuesAndComments) {
  const auto s = parse(
      "# reference\n"
      "name = demo\n"
      "task = orbit\n"
      "\n"
      "orbit.theta = pi/4   # inline\n"
      "expansion.eps = 0.1, 0.01, -2*pi/3\n");
  EXPECT_EQ(s.name(), "demo");
  EXPECT_NEAR(s.get_double("orbit.theta"), std::numbers::pi / 4, 1e-15);
  const auto list = s.get_list("expansion.eps");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_NEAR(list[2], -2 * std::numbers::pi / 3, 1e-15);
  EXPECT_EQ(s.get_int("missing", 7), 7);
  EXPECT_EQ(s.find("orbit.theta")->line, 5);
}

TEST(Scenario, SyntaxErrorCarriesPosition) {
  try {
    parse("name = a\n  no separator here\n");
    FAIL() << "expected ScenarioParseError";
  } catch (const ScenarioParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
    EXPECT_EQ(std::string(e.what()).rfind("test.scn:2:3:", 0), 0u);
  }
}

TEST(Scenario, DuplicateKeyIsRejected) {
  EXPECT_THROW(parse("name = a\nname = b\n"), ScenarioParseError);
}

TEST(Scenario, BadNumberPointsAtValue) {
  const auto s = parse("name = a\ntask = orbit\norbit.theta = abc\n");
  try {
    s.get_double("orbit.theta");
    FAIL() << "expected ScenarioParseError";
  } catch (const ScenarioParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 15);
  }
}

TEST(Scenario, ValidationRejectsUnknownKeyAndTask) {
  EXPECT_THROW(validate_scenario(parse("name = a\ntask = orbit\ncore.kind = sphere\nfield.kind = constant\n"
                                       "field.d0 = 0.5\norbit.theta = 1\nbasins.n_seeds = 3\n")),
               ScenarioParseError);
  EXPECT_THROW(validate_scenario(parse("name = a\ntask = dance\ncore.kind = sphere\n")), ScenarioParseError);
}

TEST(Scenario, BuildsDomainFromKeys) {
  const auto s = parse(
      "name = a\ntask = orbit\ncore.kind = ellipsoid\ncore.axes = 2, 1, 1\n"
      "field.kind = zonal_legendre\nfield.d0 = 0.5\nfield.eps = 0.01\nfield.axis = 1, 0, 0\n");
  const auto dom = build_domain(s);
  EXPECT_EQ(dom.core().kind(), CoreKind::Ellipsoid);
  const auto tip = dom.core().point_from_ambient(AmbientVector(2, 0, 0));
  EXPECT_NEAR(eval(dom.field(), tip), 0.51, 1e-15);
  const auto scaled = build_domain(s, 0.02);
  EXPECT_NEAR(eval(scaled.field(), tip), 0.52, 1e-15);
}

TEST(Scenario, AllBundledScenariosValidate) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(kBundled)) {
    if (entry.path().extension() != ".scn") continue;
    SCOPED_TRACE(entry.path().string());
    const auto s = Scenario::load(entry.path());
    EXPECT_NO_THROW(validate_scenario(s));
    EXPECT_EQ(s.name(), entry.path().stem().string());
    ++count;
  }
  EXPECT_GE(count, 10u);
}

TEST(Runner, OutputDirectoryPrecedence) {
  const auto s = parse("name = demo\ntask = orbit\n");
  RunOptions opt;
  EXPECT_EQ(resolve_output_dir(s, opt).filename(), "demo");
  opt.out_dir = fs::path("elsewhere");
  EXPECT_EQ(resolve_output_dir(s, opt), fs::path("elsewhere"));
  const auto t = parse("name = demo\ntask = orbit\noutput_dir = here\n");
  EXPECT_EQ(resolve_output_dir(t, RunOptions{}), fs::path("here"));
}

TEST(Runner, ConstantShellReportsContinuum) {
  RunOptions opt;
  opt.out_dir = scratch("constant_shell");
  std::ostringstream log;
  const auto result = run_scenario_file(kBundled / "constant_shell.scn", opt, log);
  ASSERT_EQ(result.exit_code, kExitOk) << result.diagnostic;
  const auto summary = slurp(*opt.out_dir / "summary.csv");
  EXPECT_NE(summary.find("ContinuumOfFixedPoints,true"), std::string::npos) << summary;
  EXPECT_TRUE(fs::exists(*opt.out_dir / "manifest.txt"));
}

TEST(Runner, ParseErrorExitCode) {
  const auto dir = scratch("parse_error");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.scn") << "name = bad\ntask = orbit\nnonsense\n";
  std::ostringstream log;
  const auto result = run_scenario_file(dir / "bad.scn", RunOptions{dir / "out"}, log);
  EXPECT_EQ(result.exit_code, kExitParse);
  EXPECT_NE(result.diagnostic.find("bad.scn:3:1"), std::string::npos) << result.diagnostic;
}

TEST(Runner, MissingFileIsIoError) {
  std::ostringstream log;
  EXPECT_EQ(run_scenario_file("/nonexistent/x.scn", RunOptions{}, log).exit_code, kExitIo);
}

TEST(Runner, NumericFailureExitCode) {
  const auto s = parse(
      "name = broken\ntask = linearize\ncore.kind = sphere\nfield.kind = zonal_legendre\n"
      "field.d0 = 0.5\nfield.eps = 0.01\nlinearize.theta = 1\nlinearize.phi = 0\n");
  RunOptions opt;
  opt.out_dir = scratch("numeric");
  std::ostringstream log;
  const auto result = run_scenario(s, opt, log);
  EXPECT_EQ(result.exit_code, kExitNumeric);
  EXPECT_NE(result.diagnostic.find("numeric failure"), std::string::npos) << result.diagnostic;
}

TEST(Runner, OutputsAreByteReproducible) {
  for (const char* name : {"sphere_p2_linearize", "circle_cos2_basins", "residual_sweep"}) {
    SCOPED_TRACE(name);
    RunOptions a, b;
    a.deterministic_manifest = b.deterministic_manifest = true;
    a.out_dir = scratch(std::string(name) + "_a");
    b.out_dir = scratch(std::string(name) + "_b");
    b.threads = 3;
    std::ostringstream log;
    const auto ra = run_scenario_file(kBundled / (std::string(name) + ".scn"), a, log);
    const auto rb = run_scenario_file(kBundled / (std::string(name) + ".scn"), b, log);
    ASSERT_EQ(ra.exit_code, kExitOk) << ra.diagnostic;
    ASSERT_EQ(ra.files, rb.files);
    for (const auto& f : ra.files) {
      if (f == "manifest.txt") continue;  // records the thread count
      EXPECT_EQ(slurp(*a.out_dir / f), slurp(*b.out_dir / f)) << f;
    }
  }
}
