#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

#include "calderon/cli.hpp"
#include "calderon/errors.hpp"
#include "calderon/experiment.hpp"

using namespace calderon;
namespace fs = std::filesystem;

namespace {

const std::string kSource = CALDERON_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("calderon_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string small_config(const std::string& extra_family = "") {
  return R"({
  "seed": 3,
  "geometry": {"sigma": {"face": "top", "rect": [0.2, 0.8, 0.2, 0.8]}, "eta": 0.25},
  "family": {"template": "scalar-times-identity", "k": 0.003)" +
         extra_family + R"(},
  "parameters": {"a1": {"type": "constant", "value": 1.0},
                 "a2": {"type": "affine", "c0": 1.0, "slope": [0.1, 0, 0]}},
  "discretization": {"h": 0.25},
  "sweep": {"direction": {"type": "constant", "value": 1.0}, "s": [0.05]}
})";
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  std::vector<std::string> argv{"calderon_lab"};
  argv.insert(argv.end(), args.begin(), args.end());
  const int code = run_cli(argv, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST(ParseConfig, DefaultConfigFile) {
  const auto c = load_config(kSource + "/configs/default.json");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.family.template_name, "scalar-times-identity");
  EXPECT_DOUBLE_EQ(c.geometry.eta, 0.25);
  EXPECT_DOUBLE_EQ(c.rho(), 0.0625);
  ASSERT_TRUE(c.a2.has_value());
  EXPECT_EQ(c.a2->describe(), "constant(1.1)");
  EXPECT_DOUBLE_EQ(c.apriori.tau0, 0.25 / 8);
  EXPECT_DOUBLE_EQ(c.apriori.eta, 0.25);
  EXPECT_TRUE(config_problems(c).empty());
}

TEST(ParseConfig, TauGridDefaults) {
  const auto c = parse_config(small_config());
  const auto t = c.geometry.tau_grid();
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t[0], 0.25 / 16);
  EXPECT_DOUBLE_EQ(t[4], 0.25 / 256);
  EXPECT_EQ(c.geometry.probe_base(), Vec3(0.5, 0.5, 1.0));
}

TEST(ParseConfig, FieldErrorsNameTheField) {
  try {
    parse_config(R"({"geometry": {"eta": "wide"}})", "cfg.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("geometry.eta"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("cfg.json"), std::string::npos);
  }
  EXPECT_THROW(parse_config(R"({"geometry": {"etta": 0.1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"family": {"template": "unknown"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"parameters": {"a1": {"type": "bump", "width": 0}}})"), ConfigError);
}

TEST(ParseConfig, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_config("{\n  \"seed\": 1,\n  oops\n}", "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, MissingFileIsIoError) { EXPECT_THROW(load_config("/nonexistent/config.json"), IoError); }

TEST(ConfigProblems, CrossValidation) {
  auto c = parse_config(small_config());
  EXPECT_TRUE(config_problems(c).empty());
  c.discretization.rho = 0.1;
  EXPECT_FALSE(config_problems(c).empty());
  c = parse_config(small_config());
  c.discretization.h = 0.3;
  EXPECT_FALSE(config_problems(c).empty());
  c = parse_config(small_config());
  c.geometry.eta = 0.35;
  EXPECT_FALSE(config_problems(c).empty());
  c = parse_config(small_config());
  c.a1.value = 3.0;  // outside [1/lambda, lambda]
  EXPECT_FALSE(config_problems(c).empty());
}

TEST(ConfigHash, StableAndSensitive) {
  EXPECT_EQ(config_hash("abc"), config_hash("abc"));
  EXPECT_NE(config_hash("abc"), config_hash("abd"));
  EXPECT_EQ(config_hash("").size(), 16u);
}

TEST(Validate, DefaultConfigPasses) {
  const auto v = run_validate(load_config(kSource + "/configs/default.json"));
  EXPECT_TRUE(v.passed);
  EXPECT_TRUE(v.k_in_window);
  EXPECT_NEAR(v.window.k_max, frequency_window_sweep(2.0, 2.0, 3).k_max, 1e-15);
}

TEST(Validate, SmallEllipticityBoundFailsNamedCondition) {
  auto c = load_config(kSource + "/configs/default.json");
  c.apriori.e1 = 1.0;
  const auto v = run_validate(c);
  EXPECT_FALSE(v.passed);
  ASSERT_NE(v.class_h.find("AR assump"), nullptr);
  EXPECT_FALSE(v.class_h.find("AR assump")->passed);
}

TEST(Validate, FrequencyOutsideWindowIsRefused) {
  auto c = parse_config(small_config());
  c.family.k = 1.0;
  EXPECT_FALSE(run_validate(c).k_in_window);
  EXPECT_THROW(require_frequency_window(c), SignConditionError);
}

TEST(RunRecorder, ManifestListsEveryFile) {
  const auto dir = scratch("recorder");
  const auto c = parse_config(small_config());
  RunRecorder rec(dir.string(), c, "unit");
  rec.write("a.csv", "x\n1\n");
  rec.stage("first", 0.5);
  rec.finish();
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "unit");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["config_hash"], config_hash(c.text));
  ASSERT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"][0], "a.csv");
  EXPECT_EQ(m["files"][1], "manifest.json");
  size_t on_disk = 0;
  for (const auto& e : fs::directory_iterator(dir)) on_disk += e.is_regular_file();
  EXPECT_EQ(on_disk, 2u);
}

TEST(RunDtn, RerunGivesIdenticalBytes) {
  const auto c = parse_config(small_config());
  std::vector<std::string> contents;
  for (const char* tag : {"dtn_a", "dtn_b"}) {
    const auto dir = scratch(tag);
    RunRecorder rec(dir.string(), c, "dtn");
    const auto o = run_dtn(c, rec, 1);
    rec.finish();
    EXPECT_GT(o.basis_size, 0);
    ASSERT_TRUE(o.difference_norm.has_value());
    EXPECT_GT(*o.difference_norm, 0.0);
    contents.push_back(slurp(dir / "dtn_a1_pairing.csv") + slurp(dir / "dtn_a2_gram.csv") +
                       slurp(dir / "dtn_difference.csv"));
    EXPECT_EQ(slurp(dir / "dtn_a1_pairing.csv").rfind("i,j,vertex_i,vertex_j,re,im\r\n", 0), 0u);
  }
  EXPECT_EQ(contents[0], contents[1]);
}

TEST(RunStability, SinglePairGivesRatioWithoutFit) {
  const auto c = parse_config(small_config());
  const auto dir = scratch("single");
  RunRecorder rec(dir.string(), c, "stability");
  const auto r = run_stability(c, rec, 1, false);
  rec.finish();
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_TRUE(r.entries[0].ratio.has_value());
  EXPECT_FALSE(r.fit.has_value());
  const auto j = nlohmann::json::parse(stability_json(r));
  EXPECT_EQ(j["schema"], "stability-report/1");
  EXPECT_EQ(stability_csv(r).substr(0, stability_csv(r).find('\n')), "s,a1,a2,lhs,rhs,ratio,violation,gap_estimate\r");
}

TEST(Cli, ExitCodes) {
  std::string out, err;
  EXPECT_EQ(cli({"validate", "--config", kSource + "/configs/default.json"}, &out, &err), kExitOk);
  EXPECT_NE(out.find("validation passed"), std::string::npos);
  EXPECT_NE(out.find("k_max"), std::string::npos);
  EXPECT_EQ(cli({"validate"}), kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}), kExitUsage);
  EXPECT_EQ(cli({"validate", "--config", "/nonexistent.json"}), kExitIo);

  const auto dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"geometry": {"eta": "x"}})";
  EXPECT_EQ(cli({"validate", "--config", (dir / "bad.json").string()}, &out, &err), kExitValidation);
  EXPECT_NE(err.find("geometry.eta"), std::string::npos);

  std::ofstream(dir / "weak.json") << R"({"apriori": {"e1": 1.0}, "family": {"k": 0.003}})";
  EXPECT_EQ(cli({"validate", "--config", (dir / "weak.json").string()}, &out, &err), kExitValidation);
  EXPECT_NE(out.find("AR assump"), std::string::npos);

  std::ofstream(dir / "fast.json") << R"({"family": {"k": 1.0}, "discretization": {"h": 0.25},
    "sweep": {"direction": {"type": "constant", "value": 1.0}, "s": [0.05]}})";
  EXPECT_EQ(cli({"stability", "--config", (dir / "fast.json").string(), "--out", (dir / "o").string()}, &out, &err),
            kExitValidation);
  EXPECT_NE(err.find("frequency window"), std::string::npos);
}

TEST(Cli, OverridesReachTheRun) {
  const auto dir = scratch("override");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << small_config();
  std::string out, err;
  ASSERT_EQ(cli({"dtn", "--config", (dir / "c.json").string(), "--out", (dir / "run").string(), "--seed", "11",
                 "--mesh-h", "0.25"},
                &out, &err),
            kExitOk)
      << err;
  const auto m = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  EXPECT_EQ(m["seed"], 11);
  EXPECT_EQ(cli({"dtn", "--config", (dir / "c.json").string(), "--mesh-h", "0.3"}), kExitValidation);
}
