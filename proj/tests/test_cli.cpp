#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "agl/cli/commands.hpp"

namespace agl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("agl_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "agl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static void spit(const std::string& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
  }

  // Binary data: y = 1 when x0 > 0; x1 and x2 are noise.
  std::string write_binary_data(std::size_t n = 60) {
    Rng rng(81);
    std::string text = "a,b,c,y\n";
    for (std::size_t i = 0; i < n; ++i) {
      const double x0 = rng.normal(), x1 = rng.normal(), x2 = rng.normal();
      text += io::format_double(x0) + "," + io::format_double(x1) + "," + io::format_double(x2) + "," +
              (x0 > 0 ? "1" : "0") + "\n";
    }
    const auto p = path("data.csv");
    spit(p, text);
    return p;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, SimulateIsByteIdentical) {
  const std::vector<std::string> common = {"--n-significant", "1", "--n-nonsignificant", "1", "--sigma2", "0",
                                           "--repeats", "2", "--seed", "7", "--epochs", "5", "--n", "60"};
  auto a = common, b = common;
  a.insert(a.begin(), {"simulate", "--output", path("a")});
  b.insert(b.begin(), {"simulate", "--output", path("b"), "--jobs", "2"});
  ASSERT_EQ(run(a), 0) << err_.str();
  ASSERT_EQ(run(b), 0) << err_.str();
  for (const char* f : {"simulate.json", "fdr.csv", "tpr.csv"}) {
    const auto x = slurp(path(std::string("a/") + f));
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(path(std::string("b/") + f))) << f;
  }
  const json j = json::parse(slurp(path("a/simulate.json")));
  EXPECT_EQ(j.at("command"), "simulate");
  EXPECT_EQ(j.at("config").at("seed"), 7);
  EXPECT_EQ(j.at("replication_seeds").size(), 2u);
  EXPECT_EQ(j.at("report").at("records").size(), 6u);
}

TEST_F(CliTest, ReportOnHandBuiltTwoCellReport) {
  json recs = json::array();
  auto rec = [](double s, const char* m, int r, bool sel1, bool sel2) {
    return json{{"sigma2", s},          {"method", m},       {"replication", r},
                {"selected", {true, sel1, sel2}}, {"support", {true, false, false}}, {"failed", false}};
  };
  recs.push_back(rec(0.0, "GL", 0, true, false));
  recs.push_back(rec(0.0, "GL", 1, false, false));
  recs.push_back(rec(0.4, "GL_AGL", 0, false, true));
  recs.push_back(rec(0.4, "GL_AGL", 1, false, true));
  spit(path("in.json"), json{{"report", {{"records", recs}}}}.dump());
  const auto before = slurp(path("in.json"));
  ASSERT_EQ(run({"report", "--input", path("in.json"), "--output", path("out")}), 0) << err_.str();
  EXPECT_EQ(slurp(path("out/fdr.csv")),
            "sigma2,method,feature,fdr\n"
            "0,GL,1,0.5\n"
            "0,GL,2,0\n"
            "0.4,GL_AGL,1,0\n"
            "0.4,GL_AGL,2,1\n");
  EXPECT_EQ(slurp(path("out/tpr.csv")),
            "sigma2,method,feature,tpr\n"
            "0,GL,0,1\n"
            "0.4,GL_AGL,0,1\n");
  EXPECT_EQ(slurp(path("in.json")), before);
}

TEST_F(CliTest, ReportReproducesSimulateTables) {
  ASSERT_EQ(run({"simulate", "--output", path("sim"), "--sigma2", "0", "0.4", "--repeats", "2", "--epochs", "5",
                 "--n", "60", "--methods", "GL", "GL_AGL"}),
            0)
      << err_.str();
  ASSERT_EQ(run({"report", "--input", path("sim/simulate.json"), "--output", path("rep")}), 0) << err_.str();
  EXPECT_EQ(slurp(path("sim/fdr.csv")), slurp(path("rep/fdr.csv")));
  EXPECT_EQ(slurp(path("sim/tpr.csv")), slurp(path("rep/tpr.csv")));
}

TEST_F(CliTest, FitThenSelectAgrees) {
  const auto data = write_binary_data();
  const std::vector<std::string> opts = {"--data", data, "--task", "binary", "--epochs", "20", "--hidden", "3",
                                         "--method", "GL", "--lambda-grid", "0.01", "0.1"};
  auto fit = opts;
  fit.insert(fit.begin(), {"fit", "--output", path("fit")});
  ASSERT_EQ(run(fit), 0) << err_.str();
  const json f = json::parse(slurp(path("fit/fit.json")));
  EXPECT_EQ(f.at("feature_names"), json({"a", "b", "c"}));
  EXPECT_EQ(f.at("n"), 60);

  for (const char* cutoff : {"1e-3", "0.5"}) {
    ASSERT_EQ(run({"select", "--fit", path("fit/fit.json"), "--cutoff", cutoff, "--output", path("sel")}), 0)
        << err_.str();
    const json s = json::parse(slurp(path("sel/select.json")));
    const auto params = io::params_from_json(f.at("result").at("params"));
    EXPECT_EQ(s.at("selected").get<std::vector<bool>>(), select_features(params, std::stod(cutoff)));
  }
}

TEST_F(CliTest, CvStabilityValidateRun) {
  const auto data = write_binary_data();
  const std::vector<std::string> opts = {"--data", data, "--task", "binary", "--epochs", "10", "--hidden", "3",
                                         "--lambda-grid", "0.01", "0.1", "--repeats", "2"};
  auto cmd = [&](std::vector<std::string> head) {
    head.insert(head.end(), opts.begin(), opts.end());
    return run(head);
  };
  ASSERT_EQ(cmd({"cv", "--method", "GL_AGL", "--output", path("o")}), 0) << err_.str();
  const json cv = json::parse(slurp(path("o/cv.json")));
  EXPECT_EQ(cv.at("lambda").at("table").size(), 2u);
  EXPECT_TRUE(cv.contains("zeta"));

  ASSERT_EQ(cmd({"stability", "--method", "GL", "--output", path("o")}), 0) << err_.str();
  EXPECT_EQ(slurp(path("o/stability.csv")).substr(0, 23), "feature,name,frequency\n");

  spit(path("mask.json"), json{{"selected", {true, false, true}}}.dump());
  ASSERT_EQ(cmd({"validate", "--mask", path("mask.json"), "--output", path("o")}), 0) << err_.str();
  const json v = json::parse(slurp(path("o/validate.json")));
  EXPECT_EQ(v.at("accuracy_full").size(), 2u);
}

TEST_F(CliTest, ConfigFileWithFlagOverrides) {
  spit(path("cfg.json"), R"({"epochs": 3, "repeats": 1, "sigma2": [0], "n": 30, "seed": 4, "methods": ["GL"]})");
  ASSERT_EQ(run({"simulate", "--config", path("cfg.json"), "--seed", "9", "--output", path("o")}), 0) << err_.str();
  const json j = json::parse(slurp(path("o/simulate.json")));
  EXPECT_EQ(j.at("config").at("seed"), 9);
  EXPECT_EQ(j.at("config").at("epochs"), 3);
  EXPECT_NE(out_.str().find("\"epochs\": 3"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"simulate", "--no-such-flag"}), 1);
  EXPECT_EQ(run({"simulate", "--mode", "sgd"}), 1);
  spit(path("cfg.json"), R"({"epochz": 3})");
  EXPECT_EQ(run({"simulate", "--config", path("cfg.json")}), 1);
  EXPECT_NE(err_.str().find("epochz"), std::string::npos);
  EXPECT_EQ(run({"fit"}), 1);
  EXPECT_EQ(run({"select", "--fit", path("missing.json")}), 1);

  spit(path("bad.csv"), "1,2,0\n3,4\n");
  EXPECT_EQ(run({"fit", "--data", path("bad.csv")}), 1);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos);
  spit(path("bad2.csv"), "1,2,0\n3,4,2\n");
  EXPECT_EQ(run({"fit", "--data", path("bad2.csv"), "--task", "binary"}), 1);
}

TEST_F(CliTest, NumericalFailureExitsTwo) {
  std::string text;
  for (int i = 0; i < 9; ++i) text += std::to_string(i) + "," + (i % 2 ? "1e300" : "-1e300") + "\n";
  spit(path("huge.csv"), text);
  EXPECT_EQ(run({"fit", "--data", path("huge.csv"), "--epochs", "2", "--output", path("o")}), 2);
  EXPECT_NE(err_.str().find("epoch"), std::string::npos);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run({"--help"}), 0); }

}  // namespace
}  // namespace agl
