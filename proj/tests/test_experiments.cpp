#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>

#include "dictcs/experiments.hpp"

using namespace dictcs;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.d = 8;
  c.m = 6;
  c.trials = 6;
  c.sparsity_levels = {1, 2};
  c.perturbations = {0.0, 1e-3};
  c.seed = 17;
  return c;
}

std::string body_without_wall_time(const ReportTable& t) {
  std::ostringstream o;
  format_report(o, t);
  std::istringstream in(o.str());
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# wall_time_s=", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST(Config, Validation) {
  ExperimentConfig c = small_config();
  EXPECT_NO_THROW(validate(c));
  c.sparsity_levels = {0};
  EXPECT_THROW(validate(c), Error);
  c = small_config();
  c.m = 9;
  EXPECT_THROW(validate(c), Error);
  c = small_config();
  c.trials = 0;
  EXPECT_THROW(validate(c), Error);
  c = small_config();
  c.perturbations = {-1e-3};
  EXPECT_THROW(validate(c), Error);
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in(
      "# scaled run\n"
      "d = 12\n"
      "m=7\n"
      "trials = 3   # short\n"
      "sparsity_levels = 1, 2,3\n"
      "perturbations = 0, 1e-3\n"
      "noise_eps = 0.01\n"
      "seed = 42\n"
      "opt_tol = 1e-7\n"
      "max_iter = 500\n");
  ExperimentConfig c = parse_config(in);
  EXPECT_EQ(c.d, 12);
  EXPECT_EQ(c.m, 7);
  EXPECT_EQ(c.trials, 3);
  EXPECT_EQ(c.sparsity_levels, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(c.perturbations, (std::vector<double>{0.0, 1e-3}));
  EXPECT_EQ(c.noise_eps, 0.01);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.solver.opt_tol, 1e-7);
  EXPECT_EQ(c.solver.max_iter, 500);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::istringstream unk("d = 8\nwidth = 3\n");
  try {
    parse_config(unk, "cfg.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos);
  }
  std::istringstream bad("d = eight\n");
  EXPECT_THROW(parse_config(bad), Error);
  std::istringstream noeq("d 8\n");
  EXPECT_THROW(parse_config(noeq), Error);
  std::istringstream zero("sparsity_levels = 0\n");
  EXPECT_THROW(parse_config(zero), Error);
}

TEST(TableExperiment, DeterministicAndCommonDraws) {
  ExperimentConfig c = small_config();
  ReportTable a = run_table_experiment(c), b = run_table_experiment(c);
  EXPECT_EQ(body_without_wall_time(a), body_without_wall_time(b));
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].coherence, coherence(build_coherent_frame(8, c.perturbations[i], frame_seed(c.seed))));
    EXPECT_EQ(a.rows[i].E_z.size(), 2u);
    EXPECT_EQ(a.rows[i].failed_trials, 0);
  }
  c.seed = 18;
  EXPECT_NE(body_without_wall_time(run_table_experiment(c)), body_without_wall_time(a));
}

TEST(TableExperiment, MaximaMatchIndependentReplay) {
  ExperimentConfig c = small_config();
  ReportTable t = run_table_experiment(c);
  Matrix A = gaussian_matrix(c.m, c.d, sensing_seed(c.seed));
  for (std::size_t i = 0; i < c.perturbations.size(); ++i) {
    Frame D = build_coherent_frame(c.d, c.perturbations[i], frame_seed(c.seed));
    for (std::size_t j = 0; j < c.sparsity_levels.size(); ++j) {
      int s = c.sparsity_levels[j];
      double ez = 0, ex = 0;
      for (int k = 0; k < c.trials; ++k) {
        Rng rng(trial_seed(c.seed, s, k));
        std::vector<int> T = random_subset(rng, 2 * c.d, s);
        Vector v = gaussian_vector(rng, s);
        Vector x0 = Vector::Zero(2 * c.d);
        for (int q = 0; q < s; ++q) x0(T[q]) = v(q);
        ASSERT_EQ(static_cast<int>((x0.array() != 0).count()), s);
        Vector z0 = D.matrix() * x0;
        auto r = l1_synthesis(A, D, A * z0, 0.0);
        ez = std::max(ez, (D.matrix() * r.coefficients.minimizer - z0).norm() / z0.norm());
        ex = std::max(ex, (r.coefficients.minimizer - x0).norm() / x0.norm());
      }
      EXPECT_EQ(t.rows[i].E_z[j], ez);
      EXPECT_EQ(t.rows[i].E_x[j], ex);
    }
  }
}

TEST(TableExperiment, UnperturbedSignalsRecovered) {
  ExperimentConfig c;
  c.d = 20;
  c.m = 14;
  c.trials = 20;
  c.sparsity_levels = {1, 2};
  c.perturbations = {0.0};
  ReportTable t = run_table_experiment(c);
  for (double e : t.rows[0].E_z) EXPECT_LE(e, 1e-5);
}

TEST(TableExperiment, NonConvergedTrialsCountedAndExcluded) {
  ExperimentConfig c = small_config();
  c.noise_eps = 1e-3;
  c.solver.max_iter = 3;
  ReportTable t = run_table_experiment(c);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.failed_trials, c.trials * 2);
    for (double e : r.E_z) EXPECT_EQ(e, 0.0);
  }
  std::ostringstream o;
  format_report(o, t);
  EXPECT_NE(o.str().find("# failed_trials=12,12\n"), std::string::npos);
}

TEST(Report, HeaderOnlyWhenEmpty) {
  ReportTable t;
  t.config.sparsity_levels.clear();
  std::ostringstream o;
  format_report(o, t);
  std::string s = o.str();
  EXPECT_NE(s.find("\nperturbation,coherence\n"), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - std::string("perturbation,coherence\n").size()), "perturbation,coherence\n");
}

TEST(Report, SingleCell) {
  ReportTable t;
  t.config.sparsity_levels = {3};
  t.rows.push_back({0.5, 0.9, {1e-6}, {0.25}, 0});
  std::ostringstream o;
  format_report(o, t);
  std::istringstream in(o.str());
  std::string line;
  std::vector<std::string> data;
  while (std::getline(in, line))
    if (line[0] != '#') data.push_back(line);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0], "perturbation,coherence,E_z_3,E_x_3");
  EXPECT_EQ(std::count(data[1].begin(), data[1].end(), ','), 3);
}

TEST(Report, RoundTrip) {
  ExperimentConfig c = small_config();
  ReportTable t = run_table_experiment(c);
  std::string path = ::testing::TempDir() + "report_roundtrip.csv";
  write_report(t, path);
  std::ifstream f(path);
  ReportTable back = parse_report(f, path);
  EXPECT_EQ(back.config.seed, c.seed);
  EXPECT_EQ(back.metadata.at("generator"), "mt19937_64");
  EXPECT_EQ(back.config.sparsity_levels, c.sparsity_levels);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_NEAR(back.rows[i].perturbation, t.rows[i].perturbation, 1e-12);
    EXPECT_NEAR(back.rows[i].coherence, t.rows[i].coherence, 1e-12);
    for (std::size_t j = 0; j < t.rows[i].E_z.size(); ++j) {
      EXPECT_NEAR(back.rows[i].E_z[j], t.rows[i].E_z[j], 1e-12);
      EXPECT_NEAR(back.rows[i].E_x[j], t.rows[i].E_x[j], 1e-12);
    }
  }
  std::remove(path.c_str());
  EXPECT_THROW(write_report(t, "/nonexistent-dir/r.csv"), Error);
}

TEST(Report, MalformedInputRejected) {
  std::istringstream bad("perturbation,coherence,E_z_2\n");
  EXPECT_THROW(parse_report(bad), Error);
  std::istringstream ragged("perturbation,coherence,E_z_2,E_x_2\n0,1,2\n");
  EXPECT_THROW(parse_report(ragged), Error);
}

TEST(ExampleDemo, PremiseNorms) {
  auto p = example_premise(10, 0.05, {0, 10});
  EXPECT_NEAR(p.u_T, 2.05, 1e-14);
  EXPECT_NEAR(p.u_Tc, 0.45, 1e-14);
  EXPECT_TRUE(p.holds());
  auto q = example_premise(10, 0.5, {0, 10});
  EXPECT_NEAR(q.u_T, 2.5, 1e-14);
  EXPECT_NEAR(q.u_Tc, 4.5, 1e-14);
  EXPECT_FALSE(q.holds());
}

TEST(ExampleDemo, PremiseFailureCarriesNorms) {
  try {
    run_example_demo(10, 0.5, {0, 10}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PremiseFailed);
    EXPECT_NE(std::string(e.what()).find("4.5"), std::string::npos);
  }
  EXPECT_THROW(run_example_demo(10, 0.05, {0, 5}, 1), Error);
  EXPECT_THROW(run_example_demo(10, 0.05, {10}, 1), Error);
}

TEST(ExampleDemo, RecordsRecoveryFailure) {
  ExampleDemo r = run_example_demo(10, 0.05, {0, 10}, 3);
  EXPECT_TRUE(r.premise.holds());
  EXPECT_EQ(r.m, 5);
  EXPECT_EQ(r.rank_A, 5);
  EXPECT_FALSE(r.nsp_holds);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_GT(r.witness->recovery_error, 1e-5);
  EXPECT_TRUE(r.failure_recorded());
  EXPECT_GE(r.worst_error, r.random_worst);
}
