#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
  std::map<std::string, std::string> kv;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lig_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + LIG_CLI + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::istringstream lines(r.out);
    for (std::string line; std::getline(lines, line);) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) r.kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return r;
  }

  fs::path dir_;
};

const std::string kImage32 = LIG_TEST_DATA "/astronaut_32.png";
const std::string kImage256 = LIG_TEST_DATA "/astronaut_256.png";

TEST_F(Cli, FitThenEvalAgrees) {
  const std::string model = path("m.lig").string();
  const Result fit = run("fit " + kImage32 + " -o " + model + " --points 64 --iters 80 --seed 7");
  ASSERT_EQ(fit.exit_code, 0) << fit.err;
  for (const char* key : {"n0", "n1", "stage0_final_loss", "stage1_final_loss", "psnr_db",
                          "wall_time_s", "model"}) {
    EXPECT_TRUE(fit.kv.count(key)) << key;
  }
  EXPECT_EQ(fit.kv.at("n0"), "8");
  EXPECT_EQ(fit.kv.at("n1"), "56");

  const Result eval = run("eval " + model + " " + kImage32);
  ASSERT_EQ(eval.exit_code, 0) << eval.err;
  // Same model and reference: identical up to the printed precision.
  EXPECT_NEAR(std::stod(eval.kv.at("psnr_db")), std::stod(fit.kv.at("psnr_db")), 1e-6);

  // A re-quantized render compared against the source differs only by 8-bit rounding.
  const std::string png = path("r.png").string();
  const Result render = run("render " + model + " -o " + png);
  ASSERT_EQ(render.exit_code, 0) << render.err;
  EXPECT_TRUE(fs::exists(png));
  EXPECT_EQ(render.kv.at("width"), "32");

  const Result bench = run("bench " + model + " --repeats 3");
  ASSERT_EQ(bench.exit_code, 0) << bench.err;
  const double fps = std::stod(bench.kv.at("fps"));
  EXPECT_TRUE(std::isfinite(fps) && fps > 0);
}

TEST_F(Cli, EvalDimensionMismatchFails) {
  const std::string model = path("m.lig").string();
  ASSERT_EQ(run("fit " + kImage32 + " -o " + model + " --points 16 --iters 3").exit_code, 0);
  const Result eval = run("eval " + model + " " + kImage256);
  EXPECT_NE(eval.exit_code, 0);
  EXPECT_EQ(eval.err.rfind("error=dimension_mismatch ", 0), 0u) << eval.err;
  EXPECT_EQ(std::count(eval.err.begin(), eval.err.end(), '\n'), 1);
}

TEST_F(Cli, InfoReportsAllocation) {
  const std::string model = path("m.lig").string();
  ASSERT_EQ(run("fit " + kImage32 + " -o " + model + " --points 8 --ratio 0.125 --iters 2").exit_code,
            0);
  const Result info = run("info " + model);
  ASSERT_EQ(info.exit_code, 0) << info.err;
  EXPECT_EQ(info.kv.at("n0"), "1");
  EXPECT_EQ(info.kv.at("n1"), "7");
  EXPECT_EQ(info.kv.at("levels"), "2");
  EXPECT_EQ(info.kv.at("level0_width"), "8");
  EXPECT_EQ(info.kv.at("width"), "32");
  EXPECT_TRUE(info.kv.count("res_min"));
  EXPECT_TRUE(info.kv.count("res_max"));
}

TEST_F(Cli, DeterministicFitsAreByteIdentical) {
  const std::string a = path("a.lig").string(), b = path("b.lig").string();
  const std::string args = " --points 48 --iters 40 --seed 7 --deterministic";
  ASSERT_EQ(run("fit " + kImage32 + " -o " + a + args).exit_code, 0);
  ASSERT_EQ(run("fit " + kImage32 + " -o " + b + args).exit_code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(Cli, SingleLevelFit) {
  const std::string model = path("s.lig").string();
  const Result fit = run("fit " + kImage32 + " -o " + model + " --points 20 --iters 5 --single-level");
  ASSERT_EQ(fit.exit_code, 0) << fit.err;
  EXPECT_EQ(fit.kv.at("n0"), "0");
  EXPECT_FALSE(fit.kv.count("stage0_final_loss"));
  EXPECT_EQ(run("info " + model).kv.at("levels"), "1");
}

TEST_F(Cli, FailuresAreSingleLineAndNonzero) {
  const fs::path junk = path("junk.lig");
  std::ofstream(junk) << "XXXXjunkjunk";
  struct Case {
    std::string args;
    std::string code;
  };
  const Case cases[] = {
      {"info " + junk.string(), "bad_magic"},
      {"info " + path("missing.lig").string(), "file_not_found"},
      {"render " + junk.string() + " -o " + path("x.png").string(), "bad_magic"},
      {"fit " + path("none.png").string() + " -o " + path("m.lig").string() + " --points 8",
       "file_not_found"},
      {"fit " + kImage32 + " -o " + path("m.lig").string() + " --points 1", "invalid_argument"},
      {"bench " + junk.string(), "bad_magic"},
      {"frobnicate", "usage"},
      {"fit " + kImage32, "usage"},
  };
  for (const auto& c : cases) {
    const Result r = run(c.args);
    EXPECT_NE(r.exit_code, 0) << c.args;
    EXPECT_EQ(r.err.rfind("error=" + c.code + " ", 0), 0u) << c.args << ": " << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << c.args;
  }
}

TEST_F(Cli, ThreadCapIsHonored) {
  const std::string a = path("a.lig").string(), b = path("b.lig").string();
  const std::string args = " --points 32 --iters 20 --seed 3 --deterministic";
  ASSERT_EQ(run("fit " + kImage32 + " -o " + a + args).exit_code, 0);
  ASSERT_EQ(std::system(("LIG_THREADS=1 \"" + std::string(LIG_CLI) + "\" fit " + kImage32 +
                         " -o " + b + args + " >/dev/null")
                            .c_str()),
            0);
  // Deterministic reduction makes the result independent of the worker count.
  EXPECT_EQ(slurp(a), slurp(b));
}

}  // namespace
