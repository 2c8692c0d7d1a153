#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dictcs/cli.hpp"

namespace fs = std::filesystem;
using dictcs::cli::dispatch;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = dispatch(args, o, e);
  return {c, o.str(), e.str()};
}

std::map<std::string, std::string> kv(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto p = line.find('=');
    if (p != std::string::npos) m[line.substr(0, p)] = line.substr(p + 1);
  }
  return m;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("dictcs_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string file(const std::string& name, const std::string& body) {
    auto p = (dir / name).string();
    std::ofstream(p) << body;
    return p;
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(CliTest, FrameInfoIdentity) {
  auto r = run({"frame-info", file("I.csv", "1,0,0\n0,1,0\n0,0,1\n")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["d"], "3");
  EXPECT_EQ(m["n"], "3");
  EXPECT_EQ(m["coherence"], "0");
  EXPECT_EQ(m["frame_bound_A"], "1");
  EXPECT_EQ(m["frame_bound_B"], "1");
  EXPECT_EQ(m["spark"], "inf");
}

TEST_F(CliTest, FrameInfoOverBudgetIsUnknown) {
  auto r = run({"--budget", "1", "frame-info", file("D.csv", "1,0,1,1\n0,1,1,-1\n")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["spark"], "unknown");
  EXPECT_EQ(m["full_spark"], "unknown");
  EXPECT_FALSE(m["coherence"].empty());
}

TEST_F(CliTest, CheckNspOnesRow) {
  auto r = run({"check-nsp", file("ones.csv", "1,1,1\n"), "--s", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["holds"], "false");
  EXPECT_NEAR(std::stod(m["worst_value"]), 1.0, 1e-9);
  EXPECT_FALSE(m["witness"].empty());
}

TEST_F(CliTest, GlobalFlagsAcceptedAfterSubcommand) {
  auto a = run({"check-nsp", file("ones.csv", "1,1,1\n"), "--s", "1", "--verbose"});
  auto b = run({"--verbose", "check-nsp", file("ones.csv", "1,1,1\n"), "--s", "1"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(kv(a.out).count("lps_solved"), 1u);
}

TEST_F(CliTest, SolveIsDeterministicAndWritesSideFiles) {
  auto A = file("A.csv", "1,2,0\n0,1,1\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto y = file("y.csv", "1\n2\n");
  auto r1 = run({"solve", A, D, y, "--eps", "0"});
  auto r2 = run({"solve", A, D, y, "--eps", "0"});
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_EQ(r1.out, r2.out);
  EXPECT_EQ(kv(r1.out)["status"], "Optimal");
  EXPECT_NEAR(std::stod(kv(r1.out)["objective"]), 5.0 / 3.0, 1e-7);

  auto out = path("rep.txt");
  auto r3 = run({"solve", A, D, y, "--eps", "0", "--out", out});
  ASSERT_EQ(r3.code, 0);
  EXPECT_TRUE(r3.out.empty());
  EXPECT_TRUE(fs::exists(out));
  auto x = dictcs::read_matrix(out + ".x.csv");
  auto z = dictcs::read_matrix(out + ".z.csv");
  EXPECT_EQ(x.rows(), 4);
  EXPECT_EQ(z.rows(), 3);
  EXPECT_NEAR(x.lpNorm<1>(), 5.0 / 3.0, 1e-7);
}

TEST_F(CliTest, UsageErrorsExitTwoWithoutFiles) {
  auto A = file("A.csv", "1,2,0\n0,1,1\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto y = file("y.csv", "1\n2\n");
  auto out = path("never.txt");
  EXPECT_EQ(run({"solve", A, D, y, "--out", out}).code, 2);  // missing --eps
  EXPECT_EQ(run({"solve", A, D, y, "--eps", "-1", "--out", out}).code, 2);
  EXPECT_EQ(run({"check-dnsp", A, D, "--s", "1", "--trials", "5", "--out", out}).code, 2);  // --seed missing
  EXPECT_EQ(run({"experiment", "--config", "x.cfg"}).code, 2);
  EXPECT_EQ(run({"no-such-command"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(out + ".x.csv"));
}

TEST_F(CliTest, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("check-dnsp"), std::string::npos);
}

TEST_F(CliTest, BadMatrixReportsLocation) {
  auto r = run({"frame-info", file("bad.csv", "1,2\n3,x\n")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.csv:2"), std::string::npos) << r.err;
}

TEST_F(CliTest, DimensionMismatchNamesBothShapes) {
  auto r = run({"check-injectivity", file("A.csv", "1,2\n0,1\n"), file("D.csv", "1,0,1\n0,1,1\n1,1,1\n"), "--s", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("2x2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("3x3"), std::string::npos) << r.err;
}

TEST_F(CliTest, NonOptimalSolverExitsOne) {
  auto A = file("A.csv", "1,2,0\n0,1,1\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto y = file("y.csv", "1\n2\n");
  auto r = run({"--max-iter", "1", "analyze", A, D, y, "--eps", "0.1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(kv(r.out)["status"], "MaxIterations");
}

TEST_F(CliTest, DnspModes) {
  auto A = file("A.csv", "1,2,0\n0,1,1\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto c = run({"check-dnsp", A, D, "--s", "1"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(kv(c.out)["method"], "FullSparkEquivalence");
  auto f1 = run({"check-dnsp", A, D, "--s", "1", "--trials", "50", "--seed", "3"});
  auto f2 = run({"check-dnsp", A, D, "--s", "1", "--trials", "50", "--seed", "3"});
  ASSERT_EQ(f1.code, 0);
  EXPECT_EQ(f1.out, f2.out);
  EXPECT_EQ(kv(f1.out)["method"], "Falsification");
}

TEST_F(CliTest, OracleFindsSparsest) {
  auto A = file("A.csv", "1,0,0\n0,1,0\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto y = file("y.csv", "2\n2\n");
  auto r = run({"oracle", A, D, y, "--s", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(kv(r.out)["sparsity"], "1");
}

TEST_F(CliTest, BoundsPrintsInputsAndNaWhenVacuous) {
  auto A = file("A.csv", "1,1,1\n");
  auto D = file("I.csv", "1,0,0\n0,1,0\n0,0,1\n");
  auto x0 = file("x0.csv", "1\n0\n0\n");
  auto r = run({"bounds", A, D, x0, "--s", "2", "--eps", "0.1", "--seed", "1", "--verbose"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_NEAR(std::stod(m["c"]), -std::sqrt(2.0), 1e-9);
  EXPECT_EQ(m["c_mode"], "ExactTiny");
  EXPECT_EQ(m["bound_theorem_sta"], "n/a");
  EXPECT_EQ(m["bound_lemma_coeff_stated"], "n/a");
  for (const char* k : {"nu_A", "nu_D", "n", "eps", "delta", "A_spectral", "x0_l1", "sigma_s_x0"})
    EXPECT_EQ(m.count(k), 1u) << k;
  EXPECT_EQ(run({"bounds", A, D, x0, "--s", "2"}).code, 2);
}

TEST_F(CliTest, BoundsFiniteWhenConstantPositive) {
  auto A = file("A.csv", "1,0,0\n0,1,0\n0,0,1\n");
  auto D = file("D.csv", "1,0,0,1\n0,1,0,1\n0,0,1,1\n");
  auto x0 = file("x0.csv", "1\n0\n0\n0\n");
  auto r = run({"bounds", A, D, x0, "--s", "1", "--eps", "0.1", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  // A invertible: ker(AD) = ker(D), so D v = 0 directions are skipped and the constant is vacuous.
  EXPECT_EQ(m["c"], "inf");
}

TEST_F(CliTest, ExperimentCsv) {
  auto cfg = file("e.cfg", "d = 8\nm = 6\ntrials = 3\nsparsity_levels = 1\nperturbations = 0, 0.01\n");
  auto r1 = run({"experiment", "--config", cfg, "--seed", "4"});
  ASSERT_EQ(r1.code, 0) << r1.err;
  std::istringstream in(r1.out);
  auto t = dictcs::parse_report(in, "stdout");
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.config.seed, 4u);
  auto out = path("t.csv");
  ASSERT_EQ(run({"experiment", "--config", cfg, "--seed", "4", "--out", out}).code, 0);
  EXPECT_TRUE(fs::exists(out));
  auto bad = run({"experiment", "--config", file("b.cfg", "d = 8\nbogus = 1\n"), "--seed", "1"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("b.cfg:2"), std::string::npos) << bad.err;
}

TEST_F(CliTest, DemoRecordsFailureAndPremise) {
  auto r = run({"demo-example1", "--d", "6", "--eps", "0.05", "--T", "1,7", "--seed", "2", "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["premise_holds"], "true");
  EXPECT_EQ(m["failure_recorded"], "true");
  auto bad = run({"demo-example1", "--d", "6", "--eps", "5", "--T", "1,2,7", "--seed", "2"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(kv(bad.out)["premise_holds"], "false");
  EXPECT_NE(bad.err.find("PremiseFailed"), std::string::npos);
}
