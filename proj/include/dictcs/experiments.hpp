#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dictcs/error.hpp"
#include "dictcs/frames.hpp"
#include "dictcs/io.hpp"
#include "dictcs/l1solvers.hpp"
#include "dictcs/nspcert.hpp"
#include "dictcs/rng.hpp"

namespace dictcs {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentConfig {
  int d = 50;
  int m = 30;
  int trials = 100;
  std::vector<int> sparsity_levels = {2, 3};
  std::vector<double> perturbations = {0.0, 1e-4, 1e-3, 3e-3, 9e-3};
  double noise_eps = 0.0;
  std::uint64_t seed = 1;
  SolverOptions solver;
  double failure_threshold = 1e-5;
};

inline void validate(const ExperimentConfig& c) {
  require(c.d >= 4, "experiment: d must be at least 4");
  require(c.m >= 1 && c.m <= c.d, "experiment: m must lie in [1, d]");
  require(c.trials >= 1, "experiment: trials must be at least 1");
  for (int s : c.sparsity_levels) require(s >= 1 && s <= c.d, "experiment: sparsity levels must lie in [1, d]");
  for (double p : c.perturbations)
    require(std::isfinite(p) && p >= 0, "experiment: perturbations must be finite and nonnegative");
  require(std::isfinite(c.noise_eps) && c.noise_eps >= 0, "experiment: noise_eps must be finite and nonnegative");
  require(c.failure_threshold > 0, "experiment: failure_threshold must be positive");
  require(c.solver.feas_tol > 0 && c.solver.opt_tol > 0 && c.solver.max_iter >= 1, "experiment: bad solver options");
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_scalar(const std::string& text, const std::string& where) {
  std::istringstream ss(text);
  T v{};
  ss >> v;
  if (ss.fail() || !(ss >> std::ws).eof()) throw Error(ErrorKind::InvalidInput, where + ": cannot parse '" + text + "'");
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& where) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_scalar<T>(trim(cell), where));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += format_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

// Flat `key = value` text; `#` starts a comment; unknown keys are rejected.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, where + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    if (key == "d") c.d = detail::parse_scalar<int>(val, where);
    else if (key == "m") c.m = detail::parse_scalar<int>(val, where);
    else if (key == "trials") c.trials = detail::parse_scalar<int>(val, where);
    else if (key == "sparsity_levels") c.sparsity_levels = detail::parse_list<int>(val, where);
    else if (key == "perturbations") c.perturbations = detail::parse_list<double>(val, where);
    else if (key == "noise_eps") c.noise_eps = detail::parse_scalar<double>(val, where);
    else if (key == "seed") c.seed = detail::parse_scalar<std::uint64_t>(val, where);
    else if (key == "failure_threshold") c.failure_threshold = detail::parse_scalar<double>(val, where);
    else if (key == "feas_tol") c.solver.feas_tol = detail::parse_scalar<double>(val, where);
    else if (key == "opt_tol") c.solver.opt_tol = detail::parse_scalar<double>(val, where);
    else if (key == "max_iter") c.solver.max_iter = detail::parse_scalar<int>(val, where);
    else throw Error(ErrorKind::InvalidInput, where + ": unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline ExperimentConfig read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, path + ": cannot open for reading");
  return parse_config(f, path);
}

// One line, same keys as the config file, space separated.
inline std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "d=" << c.d << " m=" << c.m << " n=" << 2 * c.d << " trials=" << c.trials
    << " sparsity_levels=" << detail::join(c.sparsity_levels) << " perturbations=" << detail::join(c.perturbations)
    << " noise_eps=" << format_double(c.noise_eps) << " failure_threshold=" << format_double(c.failure_threshold)
    << " feas_tol=" << format_double(c.solver.feas_tol) << " opt_tol=" << format_double(c.solver.opt_tol)
    << " max_iter=" << c.solver.max_iter;
  return o.str();
}

struct ReportRow {
  double perturbation = 0;
  double coherence = 0;
  std::vector<double> E_z, E_x;  // per sparsity level
  int failed_trials = 0;         // solver did not converge; excluded from the maxima
};

struct ReportTable {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  double wall_seconds = 0;
  std::map<std::string, std::string> metadata;  // filled when parsed back
};

// Streams used by the table experiment; shared across perturbation levels.
inline std::uint64_t frame_seed(std::uint64_t master) { return derive_seed(master, 1); }
inline std::uint64_t sensing_seed(std::uint64_t master) { return derive_seed(master, 2); }
inline std::uint64_t trial_seed(std::uint64_t master, int s, int t) { return derive_seed(master, 3, s, t); }

inline Vector random_sparse(Rng& rng, int n, int s) {
  std::vector<int> T = random_subset(rng, n, s);
  Vector x = Vector::Zero(n);
  do {
    Vector v = gaussian_vector(rng, s);
    for (int j = 0; j < s; ++j) x(T[j]) = v(j);
  } while (x.norm() == 0.0);
  return x;
}

// Maximum relative signal and coefficient errors of l1-synthesis on the coherent DCT frame.
inline ReportTable run_table_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  auto t0 = std::chrono::steady_clock::now();
  ReportTable tab;
  tab.config = cfg;
  const int n = 2 * cfg.d;
  Matrix A = gaussian_matrix(cfg.m, cfg.d, sensing_seed(cfg.seed));
  for (double pert : cfg.perturbations) {
    Frame D = build_coherent_frame(cfg.d, pert, frame_seed(cfg.seed));
    ReportRow row;
    row.perturbation = pert;
    row.coherence = coherence(D);
    for (int s : cfg.sparsity_levels) {
      double ez = 0, ex = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        // same draws for every perturbation level
        Rng rng(trial_seed(cfg.seed, s, t));
        Vector x0 = random_sparse(rng, n, s);
        Vector z0 = D.matrix() * x0;
        Vector y = A * z0;
        if (cfg.noise_eps > 0) {
          Vector w = gaussian_vector(rng, cfg.m);
          y += w * (cfg.noise_eps / w.norm());
        }
        SynthesisResult r = l1_synthesis(A, D, y, cfg.noise_eps, cfg.solver);
        if (r.coefficients.status != SolverStatus::Optimal) {
          ++row.failed_trials;
          continue;
        }
        ez = std::max(ez, (r.signal - z0).norm() / z0.norm());
        ex = std::max(ex, (r.coefficients.minimizer - x0).norm() / x0.norm());
      }
      row.E_z.push_back(ez);
      row.E_x.push_back(ex);
    }
    tab.rows.push_back(std::move(row));
  }
  tab.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tab;
}

inline void format_report(std::ostream& out, const ReportTable& t) {
  const auto& c = t.config;
  out << "# dictcs experiment report\n";
  out << "# seed=" << c.seed << "\n";
  out << "# generator=" << kRngName << "\n";
  out << "# config " << format_config(c) << "\n";
  std::vector<int> failed;
  for (const auto& r : t.rows) failed.push_back(r.failed_trials);
  out << "# failed_trials=" << detail::join(failed) << "\n";
  out << "# version=dictcs " << kVersion << " eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
      << EIGEN_MINOR_VERSION << "\n";
  out << "# wall_time_s=" << format_double(t.wall_seconds) << "\n";
  out << "perturbation,coherence";
  for (int s : c.sparsity_levels) out << ",E_z_" << s << ",E_x_" << s;
  out << "\n";
  for (const auto& r : t.rows) {
    out << format_double(r.perturbation) << "," << format_double(r.coherence);
    for (std::size_t j = 0; j < r.E_z.size(); ++j) out << "," << format_double(r.E_z[j]) << "," << format_double(r.E_x[j]);
    out << "\n";
  }
}

inline void write_report(const ReportTable& t, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Io, path + ": cannot open for writing");
  format_report(f, t);
  if (!f) throw Error(ErrorKind::Io, path + ": write failed");
}

// Reads a report back; sparsity levels come from the header, metadata lines into `metadata`.
inline ReportTable parse_report(std::istream& in, const std::string& source = "<report>") {
  ReportTable t;
  t.config.sparsity_levels.clear();
  t.config.perturbations.clear();
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = detail::trim(line.substr(1));
      auto eq = body.find('=');
      auto sp = body.find(' ');
      if (eq != std::string::npos && (sp == std::string::npos || eq < sp))
        t.metadata[body.substr(0, eq)] = body.substr(eq + 1);
      else if (sp != std::string::npos)
        t.metadata[body.substr(0, sp)] = body.substr(sp + 1);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (!header) {
      if (cells.size() < 2 || cells[0] != "perturbation" || cells[1] != "coherence" || cells.size() % 2)
        throw Error(ErrorKind::Io, where + ": malformed report header");
      for (std::size_t j = 2; j < cells.size(); j += 2) {
        if (cells[j].rfind("E_z_", 0) != 0 || cells[j + 1] != "E_x_" + cells[j].substr(4))
          throw Error(ErrorKind::Io, where + ": malformed report header");
        t.config.sparsity_levels.push_back(detail::parse_scalar<int>(cells[j].substr(4), where));
      }
      header = true;
      continue;
    }
    if (cells.size() != 2 + 2 * t.config.sparsity_levels.size())
      throw Error(ErrorKind::Io, where + ": expected " + std::to_string(2 + 2 * t.config.sparsity_levels.size()) +
                                     " columns");
    ReportRow r;
    r.perturbation = detail::parse_scalar<double>(cells[0], where);
    r.coherence = detail::parse_scalar<double>(cells[1], where);
    for (std::size_t j = 2; j < cells.size(); j += 2) {
      r.E_z.push_back(detail::parse_scalar<double>(cells[j], where));
      r.E_x.push_back(detail::parse_scalar<double>(cells[j + 1], where));
    }
    t.config.perturbations.push_back(r.perturbation);
    t.rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorKind::Io, source + ": missing report header");
  if (auto it = t.metadata.find("seed"); it != t.metadata.end())
    t.config.seed = detail::parse_scalar<std::uint64_t>(it->second, source);
  return t;
}

// l1 norms of the kernel generator (w, -1) of [I, w] on T and off T.
struct ExamplePremise {
  double u_T = 0;
  double u_Tc = 0;
  bool holds() const { return u_T > u_Tc; }
};

inline ExamplePremise example_premise(int d, double eps, const std::vector<int>& T) {
  Frame D = build_example_frame(d, eps);
  require(T.size() >= 2, "example demo: T needs at least two indices");
  for (int t : T) require(t >= 0 && t <= d, "example demo: index out of range");
  require(std::find(T.begin(), T.end(), 0) != T.end() && std::find(T.begin(), T.end(), d) != T.end(),
          "example demo: T must contain the first and the last index");
  Vector u(d + 1);
  u.head(d) = D.matrix().col(d);
  u(d) = -1.0;
  ExamplePremise p;
  std::vector<int> Tc = complement(T, d + 1);
  p.u_T = detail::l1_on(u, T);
  p.u_Tc = detail::l1_on(u, Tc);
  return p;
}

struct ExampleDemo {
  int d = 0;
  double eps = 0;
  std::vector<int> T;
  ExamplePremise premise;
  int m = 0;
  int rank_A = 0;
  bool nsp_holds = false;
  std::optional<Counterexample> witness;  // from the null space search
  int random_trials = 0;
  double random_worst = 0;                // over random signals supported on T
  double worst_error = 0;
  double failure_threshold = 1e-5;
  bool failure_recorded() const { return worst_error > failure_threshold; }
};

// Frame [I, w] with a kernel vector concentrated on T: no sensing matrix with a kernel recovers every
// signal supported on T. Runs the witness search and random T-supported signals through l1-synthesis.
inline ExampleDemo run_example_demo(int d, double eps, const std::vector<int>& T, std::uint64_t seed, int m = 0,
                                    int random_trials = 200, const NspOptions& opt = {}) {
  ExampleDemo out;
  out.d = d;
  out.eps = eps;
  out.T = T;
  std::sort(out.T.begin(), out.T.end());
  out.premise = example_premise(d, eps, out.T);
  if (!out.premise.holds())
    throw Error(ErrorKind::PremiseFailed, "|u_T|_1 = " + format_double(out.premise.u_T) +
                                              " is not larger than |u_{T^c}|_1 = " + format_double(out.premise.u_Tc));
  out.m = m > 0 ? m : std::max(1, d / 2);
  require(out.m < d, "example demo: the sensing matrix needs fewer rows than d");
  out.failure_threshold = opt.failure_threshold;
  Frame D = build_example_frame(d, eps);
  Matrix A = gaussian_matrix(out.m, d, seed);
  out.rank_A = rank(A);
  const int s = static_cast<int>(out.T.size());

  std::vector<detail::NspEntry> failing;
  NspCertificate cert = detail::nsp_scan(A * D.matrix(), s, opt, &failing);
  out.nsp_holds = cert.holds;
  out.witness = detail::find_dnsp_violation(A, D, s, failing, opt);
  if (out.witness) out.worst_error = out.witness->recovery_error;

  Rng rng(derive_seed(seed, 7));
  out.random_trials = random_trials;
  for (int t = 0; t < random_trials; ++t) {
    Vector x0 = Vector::Zero(d + 1);
    Vector c = gaussian_vector(rng, s);
    for (int j = 0; j < s; ++j) x0(out.T[j]) = c(j);
    if (x0.norm() == 0.0) continue;
    double e = detail::recovery_error(A, D, D.matrix() * x0, opt.solver);
    if (e > out.random_worst) out.random_worst = e;
  }
  out.worst_error = std::max(out.worst_error, out.random_worst);
  return out;
}

}  // namespace dictcs
