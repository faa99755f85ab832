#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gsbl_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(GSBL_CLI_PATH) + " " + args + " 2>" + err.string();
    Outcome o;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return o;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, got);
    const int status = pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.err = slurp(err);
    return o;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string config(const std::string& name) { return (fs::path(GSBL_CONFIG_DIR) / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ListPrintsSixExperiments) {
  const Outcome o = run("list");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "denoise-sparse\ndeconv-1d\ncombined-reg\ndeconv-2d\nfourier-2d\nfusion\n");
}

TEST_F(Cli, RunIsByteReproducible) {
  const std::string cfg = config("denoise-sparse.json");
  const Outcome a = run("run --config " + cfg + " --seed 7 --out " + (dir_ / "a").string());
  const Outcome b = run("run --config " + cfg + " --seed 7 --out " + (dir_ / "b").string());
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string ra = slurp(dir_ / "a" / "report.json");
  EXPECT_FALSE(ra.empty());
  EXPECT_EQ(ra, slurp(dir_ / "b" / "report.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "x_hat.csv"), slurp(dir_ / "b" / "x_hat.csv"));
  EXPECT_NE(ra.find("\"seed\": 7"), std::string::npos);
  EXPECT_NE(a.out.find("denoise-sparse: iterations="), std::string::npos);
}

TEST_F(Cli, RunReplacesExistingOutputAndLeavesNoTemporaries) {
  const std::string cfg = config("denoise-sparse.json");
  const fs::path out = dir_ / "res";
  fs::create_directories(out);
  write("res/stale.txt", "old");
  const Outcome o = run("run --config " + cfg + " --out " + out.string());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_FALSE(fs::exists(out / "stale.txt"));
  EXPECT_TRUE(fs::exists(out / "report.json"));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename().string().find(".res."), std::string::npos) << e.path();
  }
}

TEST_F(Cli, ValidateReportsRateParameter) {
  const fs::path p = write("bad.json", "{\n  \"schema\": 1,\n  \"experiment\": \"deconv-1d\",\n  \"hyper\": {\"d\": 0}\n}\n");
  const Outcome o = run("validate --config " + p.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("hyper.d"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("rate"), std::string::npos) << o.err;
  EXPECT_NE(o.err.find("line 4"), std::string::npos) << o.err;

  const Outcome good = run("validate --config " + config("fusion.json"));
  EXPECT_EQ(good.code, 0);
  EXPECT_EQ(good.out, "valid: fusion (n=40, seed=0)\n");
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("validate --config " + write("syntax.json", "{\"schema\": 1,,}").string()).code, 2);
  EXPECT_EQ(run("validate --config " + config("deconv-1d.json") + " --set hyper.c=-1").code, 2);
  EXPECT_EQ(run("validate --config " + config("deconv-1d.json") + " --backend lu").code, 2);
  EXPECT_EQ(run("run --config " + config("deconv-1d.json")).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, IllPosedModelExitsThree) {
  const fs::path p = write("kernel.json", R"({"schema": 1, "experiment": "fourier-2d", "n": 16,
    "operator": {"regularizer": "tv1", "removal": {"rows": [1]}}})");
  const Outcome o = run("run --config " + p.string() + " --out " + (dir_ / "k").string());
  EXPECT_EQ(o.code, 3) << o.err;
  EXPECT_NE(o.err.find("common kernel"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(dir_ / "k"));
}

TEST_F(Cli, IoErrorsExitFour) {
  EXPECT_EQ(run("validate --config " + (dir_ / "missing.json").string()).code, 4);
  write("file", "x");
  const Outcome o = run("run --config " + config("denoise-sparse.json") + " --out " + (dir_ / "file" / "sub").string());
  EXPECT_EQ(o.code, 4) << o.err;
}

TEST_F(Cli, SampleWritesDraws) {
  const Outcome o = run("sample --config " + config("deconv-1d.json") + " --count 25 --out " + (dir_ / "s").string());
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string samples = slurp(dir_ / "s" / "samples.csv");
  EXPECT_EQ(std::count(samples.begin(), samples.end(), '\n'), 26);
  EXPECT_EQ(slurp(dir_ / "s" / "posterior.csv").rfind("index,mean,sd,x_true\n", 0), 0u);
}
