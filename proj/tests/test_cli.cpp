#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "stokes_bie/cli.hpp"

namespace stokes_bie {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("stokes_bie_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

TEST(Cli, HelpExitsCleanly) {
  const Outcome outcome = run({"--help"});
  EXPECT_EQ(outcome.code, exit_ok);
  EXPECT_NE(outcome.out.find("verify"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, exit_usage);
  EXPECT_EQ(run({"frobnicate"}).code, exit_usage);
  EXPECT_EQ(run({"solve", "--case", "interior"}).code, exit_usage);
  EXPECT_EQ(run({"solve", "--case", "sideways", "--source", "-2,0,0"}).code, exit_usage);
  EXPECT_EQ(run({"solve", "--case", "interior", "--source", "1,2"}).code, exit_usage);
  EXPECT_EQ(run({"solve", "--case", "interior", "--source", "-2,0,0", "--mu", "-1"}).code, exit_usage);
  EXPECT_EQ(run({"gradients", "--problem", "a", "--eps", "0.1,0.2"}).code, exit_usage);
  EXPECT_EQ(run({"gradients", "--problem", "a", "--eps", "0.1"}).code, exit_usage);
  EXPECT_EQ(run({"solve", "--case", "interior", "--source", "-2,0,0", "--mesh", "/nonexistent/mesh.off"}).code,
            exit_usage);
}

TEST(Cli, SourceInsideFluidIsRejected) {
  const Outcome outcome = run({"solve", "--case", "interior", "--source", "0.1,0,0", "--subdiv", "0"});
  EXPECT_EQ(outcome.code, exit_usage);
  EXPECT_NE(outcome.err.find("outside the fluid"), std::string::npos);
}

TEST(Cli, VerifyPassesAndSelfTestFails) {
  const Outcome good = run({"verify", "--samples", "10"});
  EXPECT_EQ(good.code, exit_ok);
  EXPECT_NE(good.out.find("PASS"), std::string::npos);
  EXPECT_EQ(good.out.find("FAIL"), std::string::npos);
  const Outcome bad = run({"verify", "--samples", "10", "--h-scale", "1.01"});
  EXPECT_EQ(bad.code, exit_check_failed);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Cli, SingularSystemIsANumericalFailure) {
  // Tetrahedron entirely below z = 0: every node gets a traction condition,
  // which leaves rigid motions undetermined.
  TempDir dir;
  std::ofstream(dir.file("low.off")) << "OFF\n4 4 0\n0 0 -3\n1 0 -3\n0 1 -3\n0 0 -2\n"
                                        "3 0 2 1\n3 0 3 2\n3 0 1 3\n3 1 2 3\n";
  const Outcome outcome = run({"solve", "--case", "interior", "--source", "-10,0,0", "--mesh", dir.file("low.off")});
  EXPECT_EQ(outcome.code, exit_numerical);
  EXPECT_NE(outcome.err.find("singular"), std::string::npos);
}

TEST(Cli, ReportsAreByteIdenticalAcrossReruns) {
  TempDir dir;
  const std::vector<std::string> first{"solve",  "--case",           "exterior", "--source", "0,0.7,0", "--subdiv", "1",
                                       "--out", dir.file("a.csv"), "--json",   dir.file("a.json")};
  std::vector<std::string> second = first;
  second[8] = dir.file("b.csv");
  second[10] = dir.file("b.json");
  ASSERT_EQ(run(first).code, exit_ok);
  ASSERT_EQ(run(second).code, exit_ok);
  EXPECT_FALSE(slurp(dir.file("a.csv")).empty());
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
  EXPECT_EQ(slurp(dir.file("a.json")), slurp(dir.file("b.json")));
  EXPECT_NE(slurp(dir.file("a.csv")).find("field,component,error,reference,ratio"), std::string::npos);
}

TEST(Cli, ConfigFileSuppliesOptions) {
  TempDir dir;
  std::ofstream(dir.file("run.ini")) << "[convergence]\nsuite = homogeneous\nsubdivs = 0,1\n";
  const Outcome outcome = run({"--config", dir.file("run.ini"), "convergence"});
  EXPECT_EQ(outcome.code, exit_ok);
  EXPECT_NE(outcome.out.find("subdiv,elements,field,component,error,reference,ratio,decay"), std::string::npos);
  EXPECT_NE(outcome.out.find("\n1,80,"), std::string::npos);
}

TEST(Cli, MinimumDecayGatesTheExitCode) {
  const Outcome outcome = run({"convergence", "--suite", "homogeneous", "--subdivs", "0,1", "--min-decay", "1000"});
  EXPECT_EQ(outcome.code, exit_check_failed);
}

TEST(Cli, ThreadCountFromEnvironment) {
  ::setenv("STOKES_THREADS", "0", 1);
  EXPECT_EQ(run({"verify", "--samples", "5"}).code, exit_usage);
  ::setenv("STOKES_THREADS", "two", 1);
  EXPECT_EQ(run({"verify", "--samples", "5"}).code, exit_usage);
  // The flag wins over the environment.
  EXPECT_EQ(run({"--threads", "1", "verify", "--samples", "5"}).code, exit_ok);
  ::setenv("STOKES_THREADS", "2", 1);
  EXPECT_EQ(run({"verify", "--samples", "5"}).code, exit_ok);
  ::unsetenv("STOKES_THREADS");
}

}  // namespace
}  // namespace stokes_bie
