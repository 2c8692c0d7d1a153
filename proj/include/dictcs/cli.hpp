#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dictcs/error.hpp"
#include "dictcs/experiments.hpp"
#include "dictcs/frames.hpp"
#include "dictcs/io.hpp"
#include "dictcs/l1solvers.hpp"
#include "dictcs/matcore.hpp"
#include "dictcs/nspcert.hpp"
#include "dictcs/stability.hpp"

namespace dictcs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

// key=value lines plus vectors to be written as side files when --out is set.
class Output {
 public:
  void put(const std::string& k, const std::string& v) { text_ << k << "=" << v << "\n"; }
  void put(const std::string& k, double v) { put(k, format_double(v)); }
  void put(const std::string& k, int v) { put(k, std::to_string(v)); }
  void put(const std::string& k, bool v) { put(k, std::string(v ? "true" : "false")); }
  void put(const std::string& k, const char* v) { put(k, std::string(v)); }
  void put_vector(const std::string& k, const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
    put(k, s);
    vectors_.emplace_back(k, v);
  }
  void raw(const std::string& s) { text_ << s; }

  // Report to stdout, or to `path` with each vector beside it as `path.<key>.csv`.
  void flush(std::ostream& out, const std::string& path, bool side_files = true) const {
    if (path.empty()) {
      out << text_.str();
      return;
    }
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::Io, path + ": cannot open for writing");
    f << text_.str();
    if (!f) throw Error(ErrorKind::Io, path + ": write failed");
    if (side_files)
      for (const auto& [k, v] : vectors_) write_matrix(path + "." + k + ".csv", Matrix(v));
  }

 private:
  std::ostringstream text_;
  std::vector<std::pair<std::string, Vector>> vectors_;
};

struct Common {
  double feas_tol = 1e-9;
  double opt_tol = 1e-8;
  int max_iter = 100000;
  double budget = kDefaultCombinatorialBudget;
  std::string out;
  bool verbose = false;

  SolverOptions solver() const {
    SolverOptions o;
    o.feas_tol = feas_tol;
    o.opt_tol = opt_tol;
    o.max_iter = max_iter;
    return o;
  }
  NspOptions nsp() const {
    NspOptions o;
    o.budget = budget;
    o.solver = solver();
    return o;
  }
};

inline Vector read_vector(const std::string& path) {
  Matrix m = read_matrix(path);
  if (m.cols() != 1 && m.rows() != 1)
    throw Error(ErrorKind::InvalidInput, path + ": expected a vector, got " + shape_str(m));
  return m.cols() == 1 ? Vector(m.col(0)) : Vector(m.row(0).transpose());
}

inline void report_solver(Output& o, const SolverReport& r, bool verbose) {
  o.put("status", to_string(r.status));
  o.put("objective", r.objective);
  o.put("feasibility_residual", r.feasibility_residual);
  o.put("optimality_gap", r.optimality_gap);
  o.put("iterations", r.iterations);
  if (verbose) {
    o.put("dual_objective", r.dual_objective);
    o.put_vector("dual", r.dual);
  }
}

inline void report_counterexample(Output& o, const Counterexample& c) {
  o.put("counterexample_support", join_indices(c.support));
  o.put("recovery_error", c.recovery_error);
  o.put_vector("coefficients", c.coefficients);
  o.put_vector("signal", c.signal);
}

inline std::vector<int> parse_index_list(const std::string& s, int n) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    int i = dictcs::detail::parse_scalar<int>(dictcs::detail::trim(cell), "--T");
    require(i >= 1 && i <= n, "--T: index " + std::to_string(i) + " outside [1, " + std::to_string(n) + "]");
    out.push_back(i - 1);
  }
  return out;
}

}  // namespace detail

// Runs one command line (without the program name). Results go to `out` or the --out path.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Frame-based compressed sensing: null space certificates, l1 decoders and experiments", "dictcs"};
  app.require_subcommand(1);
  detail::Common g;
  app.add_option("--feas-tol", g.feas_tol, "feasibility tolerance")->check(CLI::PositiveNumber);
  app.add_option("--opt-tol", g.opt_tol, "relative optimality tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", g.max_iter, "iteration cap of the iterative solvers")->check(CLI::PositiveNumber);
  app.add_option("--budget", g.budget, "cap on enumerated subproblems")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "write results to this path instead of stdout");
  app.add_flag("--verbose", g.verbose, "print extra fields");

  int s = 0, trials = 0;
  double eps = 0, delta = 0;
  std::uint64_t seed = 0;
  std::string f1, f2, f3, config, tlist;
  int demo_d = 10, demo_m = 0;
  auto fall = [](CLI::App* c) { c->fallthrough(); return c; };

  auto* fi = fall(app.add_subcommand("frame-info", "coherence, frame bounds and spark of D"));
  fi->add_option("D", f1, "frame matrix file")->required();

  auto* cn = fall(app.add_subcommand("check-nsp", "decide the null space property of M at order s"));
  cn->add_option("M", f1, "matrix file")->required();
  cn->add_option("--s", s, "order")->required()->check(CLI::PositiveNumber);

  auto* cd = fall(app.add_subcommand("check-dnsp", "frame null space property of A with respect to D"));
  cd->add_option("A", f1, "sensing matrix file")->required();
  cd->add_option("D", f2, "frame matrix file")->required();
  cd->add_option("--s", s, "order")->required()->check(CLI::PositiveNumber);
  auto* cd_trials = cd->add_option("--trials", trials, "random recovery trials (falsification mode)")->check(CLI::PositiveNumber);
  auto* cd_seed = cd->add_option("--seed", seed, "random seed");
  cd_trials->needs(cd_seed);

  auto* ci = fall(app.add_subcommand("check-injectivity", "rank test rank(D_T) = rank(A D_T) for |T| = 2s"));
  ci->add_option("A", f1, "sensing matrix file")->required();
  ci->add_option("D", f2, "frame matrix file")->required();
  ci->add_option("--s", s, "order")->required()->check(CLI::PositiveNumber);

  auto* so = fall(app.add_subcommand("solve", "l1-synthesis: min |x|_1 s.t. |A D x - y| <= eps"));
  so->add_option("A", f1, "sensing matrix file")->required();
  so->add_option("D", f2, "frame matrix file")->required();
  so->add_option("y", f3, "measurement vector file")->required();
  so->add_option("--eps", eps, "noise level")->required()->check(CLI::NonNegativeNumber);

  auto* an = fall(app.add_subcommand("analyze", "l1-analysis: min |D^T z|_1 s.t. |A z - y| <= eps"));
  an->add_option("A", f1, "sensing matrix file")->required();
  an->add_option("D", f2, "frame matrix file")->required();
  an->add_option("y", f3, "measurement vector file")->required();
  an->add_option("--eps", eps, "noise level")->required()->check(CLI::NonNegativeNumber);

  auto* orc = fall(app.add_subcommand("oracle", "sparsest representation by support enumeration"));
  orc->add_option("A", f1, "sensing matrix file")->required();
  orc->add_option("D", f2, "frame matrix file")->required();
  orc->add_option("y", f3, "measurement vector file")->required();
  orc->add_option("--s", s, "largest sparsity searched")->required()->check(CLI::NonNegativeNumber);

  auto* bd = fall(app.add_subcommand("bounds", "strong null space constant and the recovery error bounds"));
  bd->add_option("A", f1, "sensing matrix file")->required();
  bd->add_option("D", f2, "frame matrix file")->required();
  bd->add_option("x0", f3, "coefficient vector file")->required();
  bd->add_option("--s", s, "order")->required()->check(CLI::PositiveNumber);
  bd->add_option("--eps", eps, "noise level")->check(CLI::NonNegativeNumber);
  bd->add_option("--delta", delta, "frame perturbation in the 1->2 norm")->check(CLI::NonNegativeNumber);
  bd->add_option("--trials", trials, "kernel samples when the constant cannot be computed exactly")
      ->check(CLI::PositiveNumber);
  bd->add_option("--seed", seed, "random seed")->required();

  auto* ex = fall(app.add_subcommand("experiment", "coherent frame recovery tables as CSV"));
  ex->add_option("--config", config, "key = value configuration file")->required();
  ex->add_option("--seed", seed, "master seed (overrides the config)")->required();

  auto* de = fall(app.add_subcommand("demo-example1", "recovery failure on the frame [I, (1+eps, eps, ..., eps)]"));
  de->add_option("--d", demo_d, "dimension")->check(CLI::Range(2, 1 << 20));
  de->add_option("--eps", eps, "off-axis weight")->check(CLI::PositiveNumber);
  de->add_option("--T", tlist, "support, 1-based, comma separated (default: first and last)");
  de->add_option("--m", demo_m, "rows of the Gaussian sensing matrix (default d/2)")->check(CLI::PositiveNumber);
  de->add_option("--trials", trials, "random signals supported on T")->check(CLI::NonNegativeNumber);
  de->add_option("--seed", seed, "random seed")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  detail::Output o;
  try {
    if (*fi) {
      Frame D(read_matrix(f1));
      FrameStats st = frame_stats(D, g.budget);
      o.put("d", D.d());
      o.put("n", D.n());
      o.put("coherence", st.coherence);
      o.put("frame_bound_A", st.lower_bound_A);
      o.put("frame_bound_B", st.upper_bound_B);
      o.put("nu_D", st.nu_D);
      o.put("spark", st.spark ? st.spark->str() : std::string("unknown"));
      o.put("full_spark", st.full_spark ? std::string(*st.full_spark ? "true" : "false") : std::string("unknown"));
    } else if (*cn) {
      Matrix M = read_matrix(f1);
      NspCertificate c = nsp_check(M, s, g.nsp());
      o.put("order", c.order);
      o.put("holds", c.holds);
      o.put("worst_support", join_indices(c.worst_support));
      o.put("worst_value", c.worst_value);
      if (g.verbose) o.put("lps_solved", c.lps_solved);
      if (c.witness) o.put_vector("witness", *c.witness);
    } else if (*cd) {
      Matrix A = read_matrix(f1);
      Frame D(read_matrix(f2));
      check_pair(A, D);
      DnspVerdict v = *cd_trials ? dnsp_falsify(A, D, s, trials, seed, g.nsp()) : dnsp_certify_fullspark(A, D, s, g.nsp());
      o.put("order", v.order);
      o.put("method", to_string(v.method));
      o.put("verdict", to_string(v.verdict));
      o.put("trials_run", v.trials_run);
      o.put("rank_A", v.rank_A);
      if (v.counterexample) detail::report_counterexample(o, *v.counterexample);
    } else if (*ci) {
      Matrix A = read_matrix(f1);
      Frame D(read_matrix(f2));
      check_pair(A, D);
      o.put("order", s);
      o.put("injective", injectivity_check(A, D, s, g.budget));
    } else if (*so || *an) {
      Matrix A = read_matrix(f1);
      Frame D(read_matrix(f2));
      Vector y = detail::read_vector(f3);
      SolverReport r;
      if (*so) {
        SynthesisResult sr = l1_synthesis(A, D, y, eps, g.solver());
        r = sr.coefficients;
        detail::report_solver(o, r, g.verbose);
        o.put_vector("x", r.minimizer);
        o.put_vector("z", sr.signal);
      } else {
        r = l1_analysis(A, D, y, eps, g.solver());
        detail::report_solver(o, r, g.verbose);
        o.put_vector("z", r.minimizer);
      }
      o.flush(out, g.out);
      if (r.status != SolverStatus::Optimal) {
        err << "error: solver finished with status " << to_string(r.status) << "\n";
        return kExitComputation;
      }
      return kExitOk;
    } else if (*orc) {
      Matrix A = read_matrix(f1);
      Frame D(read_matrix(f2));
      Vector y = detail::read_vector(f3);
      L0Result r = l0_oracle(A, D, y, s, g.budget);
      o.put("sparsity", r.sparsity);
      std::vector<int> supp;
      for (Eigen::Index i = 0; i < r.x.size(); ++i)
        if (r.x(i) != 0.0) supp.push_back(static_cast<int>(i));
      o.put("support", join_indices(supp));
      o.put_vector("x", r.x);
      o.put_vector("z", D.matrix() * r.x);
    } else if (*bd) {
      Matrix A = read_matrix(f1);
      Frame D(read_matrix(f2));
      Vector x0 = detail::read_vector(f3);
      check_pair(A, D);
      require(x0.size() == D.n(), "x0 has length " + std::to_string(x0.size()) + " but D is " + shape_str(D.matrix()));
      require(s <= D.n(), "order s must lie in [1, n]");
      SnspOptions so_opt;
      so_opt.budget = g.budget;
      SnspEstimate c = snsp_constant_estimate(A, D, s, trials > 0 ? trials : 2000, seed, so_opt);
      StabilityInputs in;
      in.nu_A = smallest_positive_singular(A);
      in.nu_D = smallest_positive_singular(D.matrix(), D.tol());
      in.n = D.n();
      in.eps = eps;
      in.delta = delta;
      in.A_spectral = spectral_norm(A);
      in.x0_l1 = x0.lpNorm<1>();
      in.sigma_s_x0 = best_s_term_residual(x0, s);
      o.put("c", c.vacuous() ? std::string("inf") : format_double(c.c_hat));
      o.put("c_mode", to_string(c.mode));
      o.put("nullity_AD", c.nullity);
      o.put("snsp_holds", c.holds());
      o.put("nu_A", in.nu_A);
      o.put("nu_D", in.nu_D);
      o.put("n", in.n);
      o.put("eps", in.eps);
      o.put("delta", in.delta);
      o.put("A_spectral", in.A_spectral);
      o.put("x0_l1", in.x0_l1);
      o.put("sigma_s_x0", in.sigma_s_x0);
      const bool usable = c.holds() && !c.vacuous();
      double nu_AD = smallest_positive_singular(A * D.matrix());
      if (usable) {
        in.c = c.c_hat;
        RobustBound rb = bound_theorem_robust(in);
        o.put("bound_theorem_sta", bound_theorem_sta(in));
        o.put("rho", rb.rho);
        o.put("bound_theorem_robust", rb.bound);
        o.put("bound_lemma_coeff", bound_lemma_coeff(in, nu_AD));
      } else {
        for (const char* k : {"bound_theorem_sta", "rho", "bound_theorem_robust", "bound_lemma_coeff"}) o.put(k, "n/a");
      }
      if (g.verbose) {
        o.put("nu_AD", nu_AD);
        o.put("bound_lemma_coeff_stated", usable ? format_double(bound_lemma_coeff_stated(in, nu_AD)) : "n/a");
        if (!c.vacuous()) o.put("worst_support", join_indices(c.worst_support));
      }
    } else if (*ex) {
      ExperimentConfig cfg = read_config(config);
      cfg.seed = seed;
      if (*app.get_option("--feas-tol")) cfg.solver.feas_tol = g.feas_tol;
      if (*app.get_option("--opt-tol")) cfg.solver.opt_tol = g.opt_tol;
      if (*app.get_option("--max-iter")) cfg.solver.max_iter = g.max_iter;
      ReportTable t = run_table_experiment(cfg);
      std::ostringstream csv;
      format_report(csv, t);
      o.raw(csv.str());
      o.flush(out, g.out, false);
      return kExitOk;
    } else if (*de) {
      double e = *de->get_option("--eps") ? eps : 0.05;
      std::vector<int> T = tlist.empty() ? std::vector<int>{0, demo_d} : detail::parse_index_list(tlist, demo_d + 1);
      ExamplePremise p = example_premise(demo_d, e, T);
      o.put("d", demo_d);
      o.put("eps", e);
      o.put("T", join_indices(T));
      o.put("premise_u_T_l1", p.u_T);
      o.put("premise_u_Tc_l1", p.u_Tc);
      o.put("premise_holds", p.holds());
      if (!p.holds()) {
        o.flush(out, g.out);
        err << "error: PremiseFailed: |u_T|_1 = " << format_double(p.u_T) << " is not larger than |u_{T^c}|_1 = "
            << format_double(p.u_Tc) << "\n";
        return kExitComputation;
      }
      NspOptions no = g.nsp();
      ExampleDemo r = run_example_demo(demo_d, e, T, seed, demo_m, *de->get_option("--trials") ? trials : 200, no);
      o.put("m", r.m);
      o.put("rank_A", r.rank_A);
      o.put("nsp_holds", r.nsp_holds);
      if (r.witness) {
        o.put("witness_support", join_indices(r.witness->support));
        o.put("witness_error", r.witness->recovery_error);
      }
      o.put("random_trials", r.random_trials);
      o.put("random_worst_error", r.random_worst);
      o.put("worst_error", r.worst_error);
      o.put("failure_recorded", r.failure_recorded());
    }
    o.flush(out, g.out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitOk;
}

inline int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace dictcs::cli
