#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "llmc_cli/commands.hpp"
#include "llmc_cli/config.hpp"
#include "llmc_cli/svg.hpp"

using namespace llmc;
using namespace llmc::cli;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("llmc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
  return p.string();
}

RunConfig quick_example(int id) {
  RunConfig cfg = example_config(id, false);
  cfg.sim.n_paths = 300;
  cfg.sim.workers = 1;
  return cfg;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig def;
  const std::string text = to_ini(def);
  EXPECT_EQ(to_ini(parse(text)), text);
  for (int id = 1; id <= 4; ++id) {
    for (bool expo : {false, true}) {
      const RunConfig ex = example_config(id, expo);
      const std::string t = to_ini(ex);
      RunConfig back = parse(t);
      back.notes = ex.notes;
      EXPECT_EQ(to_ini(back), t) << id;
    }
  }
}

TEST(Config, MissingKeysKeepDefaults) {
  const RunConfig cfg = parse("[sim]\nT = 5\n");
  EXPECT_EQ(cfg.sim.T, 5.0);
  EXPECT_EQ(cfg.sim.n_paths, SimulationConfig{}.n_paths);
  EXPECT_EQ(cfg.target.builtin, "f3");
}

TEST(Config, RejectsUnknownAndMisplacedKeys) {
  EXPECT_THROW(parse("[sim]\nhorizon = 5\n"), ConfigError);
  EXPECT_THROW(parse("[simulation]\nT = 5\n"), ConfigError);
  EXPECT_THROW(parse("[jump]\nfamily = lomax\nrate = 2\n"), ConfigError);
  EXPECT_THROW(parse("[target]\nbuiltin = f1\nsegments = 0 inf exp_decay(1)\n"), ConfigError);
}

TEST(Config, FieldLevelMessages) {
  try {
    parse("[sim]\nn_paths = 0\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sim.n_paths"), std::string::npos) << e.what();
  }
  try {
    parse("[drift]\nexact_tol = abc\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("drift.exact_tol"), std::string::npos) << e.what();
  }
  try {
    parse("[jump]\nfamily = weibull\nalpha = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("[jump]"), std::string::npos) << e.what();
  }
}

TEST(Config, CustomSegments) {
  const RunConfig cfg = parse("[target]\nsegments = 0 5 exp_decay(0.5); 5 7 power(-2,0.12); 7 inf power(-2)\n");
  EXPECT_TRUE(cfg.target.builtin.empty());
  const auto t = cfg.target.build();
  EXPECT_NEAR(t.norm_const(), TargetDensity::builtin("f3").norm_const(), 1e-12);
  EXPECT_EQ(format_segments(parse_segments(format_segments(t.segments()))), format_segments(t.segments()));
  EXPECT_THROW(parse("[target]\nsegments = 0 5\n"), ConfigError);
}

TEST(Config, ExamplePresets) {
  EXPECT_EQ(example_config(1, false).jump.family, "weibull");
  const RunConfig two = example_config(2, false);
  EXPECT_EQ(two.jump.family, "lognormal");
  EXPECT_EQ(two.jump.sigma, 2.0);
  EXPECT_NE(to_ini(two).find("sigma^2 = 4"), std::string::npos);
  EXPECT_EQ(example_config(3, false).jump.family, "lomax");
  EXPECT_EQ(example_config(4, true).jump.family, "exponential");
  const RunConfig three = example_config(3, false);
  EXPECT_EQ(three.sim.n_paths, 30000u);
  EXPECT_EQ(three.sim.T, 15.0);
  EXPECT_THROW(example_config(5, false), ConfigError);
  EXPECT_THROW(example_config(0, true), ConfigError);
}

TEST(Svg, RendersBothPanelsFromCsv) {
  const std::string csv = "bin_left,bin_right,count,density,pdf\n0,1,5,0.5,0.45\n1,2,3,0.3,0.32\n2,3,2,0.2,0.2\n";
  const std::string svg = render_histogram_svg(csv, "a < b");
  EXPECT_NE(svg.find("linear scale"), std::string::npos);
  EXPECT_NE(svg.find("log scale"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_THROW(render_histogram_svg("x,y\n1,2\n", "t"), std::invalid_argument);
  EXPECT_THROW(render_histogram_svg("bin_left,bin_right,count,density,pdf\n", "t"), std::invalid_argument);
}

TEST(Commands, SampleArtifactsAreDeterministic) {
  RunConfig cfg = quick_example(3);
  const Artifacts a = sample_artifacts(cfg);
  for (const char* name : {"samples.csv", "histogram.csv", "report.txt", "report.kv", "figure.svg"}) {
    EXPECT_TRUE(a.count(name)) << name;
  }
  EXPECT_EQ(a.at("samples.csv").substr(0, 31), "path_index,terminal,jump_count\n");
  cfg.sim.workers = 2;
  const Artifacts b = sample_artifacts(cfg);
  EXPECT_EQ(a, b);
  // the figure is a pure function of the histogram csv
  EXPECT_EQ(a.at("figure.svg"), render_histogram_svg(a.at("histogram.csv"), "f3 / lomax(alpha=1)"));
}

TEST(Commands, EchoedConfigReproducesTheRun) {
  const RunConfig cfg = quick_example(1);
  const Artifacts a = sample_artifacts(cfg);
  const std::string echo = to_ini(cfg);
  EXPECT_EQ(a.at("report.txt").find("# config\n" + echo), 0u);
  const Artifacts b = sample_artifacts(parse(echo));
  EXPECT_EQ(a.at("samples.csv"), b.at("samples.csv"));
}

TEST(Commands, InvalidConfigWritesNothing) {
  const fs::path dir = scratch("invalid");
  const std::string cfg = write_file(dir / "in" / "bad.ini", "[sim]\nn_paths = 0\n");
  CommandOptions o;
  o.out_dir = (dir / "out").string();
  std::ostringstream err;
  EXPECT_EQ(cmd_sample(cfg, o, err), exit_usage);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_NE(err.str().find("n_paths"), std::string::npos);
  EXPECT_EQ(cmd_example(5, "heavy", o, err), exit_usage);
  EXPECT_EQ(cmd_example(3, "gaussian", o, err), exit_usage);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Commands, SampleWritesFiles) {
  const fs::path dir = scratch("sample");
  std::string text = to_ini(quick_example(3));
  const std::string cfg = write_file(dir / "run.ini", text);
  CommandOptions o;
  o.out_dir = (dir / "out").string();
  o.seed = 77;
  std::ostringstream err;
  ASSERT_EQ(cmd_sample(cfg, o, err), exit_ok) << err.str();
  for (const char* name : {"samples.csv", "histogram.csv", "report.txt", "report.kv", "figure.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
  }
  std::ifstream kv(dir / "out" / "report.kv");
  std::stringstream ss;
  ss << kv.rdbuf();
  EXPECT_NE(ss.str().find("master_seed=77"), std::string::npos);
}

TEST(Commands, CheckExitCodes) {
  int code = -1;
  RunConfig lomax;
  check_artifacts(lomax, code);
  EXPECT_EQ(code, exit_ok);

  RunConfig weib;
  weib.target.builtin = "f1";
  weib.jump.family = "weibull";
  weib.jump.alpha = 0.5;
  const Artifacts a = check_artifacts(weib, code);
  EXPECT_EQ(code, exit_ok);
  EXPECT_TRUE(a.count("report.json"));

  RunConfig expo;
  expo.jump.family = "exponential";
  check_artifacts(expo, code);
  EXPECT_EQ(code, exit_failure);

  RunConfig under;
  under.target.builtin = "f2";
  under.jump.family = "lognormal";
  under.jump.sigma = 0.1;
  check_artifacts(under, code);
  EXPECT_EQ(code, exit_inconclusive);
}

TEST(Commands, TruncationLevels) {
  const fs::path dir = scratch("trunc");
  const std::string cfg = write_file(dir / "t.ini", "[sim]\nT = 2\nn_paths = 5\n");
  CommandOptions o;
  o.out_dir = (dir / "out").string();
  std::ostringstream err;
  EXPECT_EQ(cmd_truncation(cfg, std::vector<int>{}, o, err), exit_usage);
  EXPECT_EQ(cmd_truncation(cfg, std::vector<int>{8, 2}, o, err), exit_usage);
  EXPECT_FALSE(fs::exists(dir / "out"));
  ASSERT_EQ(cmd_truncation(cfg, std::vector<int>{0}, o, err), exit_ok) << err.str();
  std::ifstream in(dir / "out" / "truncation.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "level,max_sup,mean_sup\n0,0,0\n");
}
