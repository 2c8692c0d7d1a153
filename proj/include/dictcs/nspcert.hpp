#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dictcs/combinatorics.hpp"
#include "dictcs/error.hpp"
#include "dictcs/frames.hpp"
#include "dictcs/l1solvers.hpp"
#include "dictcs/lp.hpp"
#include "dictcs/matcore.hpp"
#include "dictcs/rng.hpp"

namespace dictcs {

struct NspOptions {
  double margin = 1e-9;
  double budget = kDefaultCombinatorialBudget;
  int exact_nullity_limit = 6;
  int sign_samples = 2000;          // kernel_sign_condition sampled mode
  std::uint64_t seed = 1;
  double failure_threshold = 1e-5;  // relative signal error counted as a recovery failure
  int max_witness_candidates = 64;
  int ascent_steps = 25;
  SolverOptions solver;
};

struct NspCertificate {
  int order = 0;
  bool holds = true;
  std::vector<int> worst_support;
  double worst_value = 0;  // +inf when some LP is unbounded
  std::optional<Vector> witness;
  int lps_solved = 0;
};

enum class DnspMethod { FullSparkEquivalence, Falsification };
enum class DnspOutcome { Certified, Refuted, Undetermined };

inline const char* to_string(DnspMethod m) {
  return m == DnspMethod::FullSparkEquivalence ? "FullSparkEquivalence" : "Falsification";
}
inline const char* to_string(DnspOutcome v) {
  switch (v) {
    case DnspOutcome::Certified: return "Certified";
    case DnspOutcome::Refuted: return "Refuted";
    case DnspOutcome::Undetermined: return "Undetermined";
  }
  return "Unknown";
}

struct Counterexample {
  std::vector<int> support;
  Vector coefficients;  // x0, supported on `support`
  Vector signal;        // z0 = D x0
  double recovery_error = 0;
  double violation = 0;  // min_{u in ker D} |x0 + u|_1 - |v_{T^c}|_1 for the generating v (NaN if from sampling)
};

struct DnspVerdict {
  int order = 0;
  DnspMethod method = DnspMethod::Falsification;
  DnspOutcome verdict = DnspOutcome::Undetermined;
  std::optional<Counterexample> counterexample;
  int trials_run = 0;
  int rank_A = 0;
};

struct KernelL1Min {
  double value = 0;
  Vector minimizer_u;  // element of ker D
  Vector eta;          // dual: N^T eta = 0, |eta|_inf <= 1, eta^T w_T = value
};

namespace detail {

inline Vector restrict_to(const Vector& w, const std::vector<int>& T) {
  Vector r = Vector::Zero(w.size());
  for (int t : T) r(t) = w(t);
  return r;
}

inline double l1_on(const Vector& v, const std::vector<int>& idx) {
  double s = 0;
  for (int i : idx) s += std::abs(v(i));
  return s;
}

// min_c |w_T + N c|_1 as an LP over the kernel coordinates.
inline KernelL1Min kernel_l1_min_basis(const Matrix& N, const Vector& w, const std::vector<int>& T) {
  const int n = static_cast<int>(N.rows()), k = static_cast<int>(N.cols());
  Vector wT = restrict_to(w, T);
  KernelL1Min out;
  if (k == 0) {
    out.value = wT.lpNorm<1>();
    out.minimizer_u = Vector::Zero(n);
    out.eta = wT.unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
    return out;
  }
  LinearProgram lp;
  std::vector<int> c(k), e(n);
  for (int j = 0; j < k; ++j) c[j] = lp.add_variable(0.0, false);
  for (int i = 0; i < n; ++i) e[i] = lp.add_variable(1.0);
  for (int i = 0; i < n; ++i) {
    LinearProgram::Entries up, lo;
    for (int j = 0; j < k; ++j) {
      if (N(i, j) == 0.0) continue;
      up.push_back({c[j], N(i, j)});
      lo.push_back({c[j], -N(i, j)});
    }
    up.push_back({e[i], -1.0});
    lo.push_back({e[i], -1.0});
    lp.add_constraint(std::move(up), LinearProgram::Sense::Le, -wT(i));
    lp.add_constraint(std::move(lo), LinearProgram::Sense::Le, wT(i));
  }
  LpResult r = lp.solve();
  if (r.status != LpStatus::Optimal) throw Error(ErrorKind::InvalidInput, "kernel l1 minimisation did not reach optimality");
  Vector cc(k);
  for (int j = 0; j < k; ++j) cc(j) = r.x(c[j]);
  out.minimizer_u = N * cc;
  out.value = (wT + out.minimizer_u).lpNorm<1>();
  out.eta.resize(n);
  for (int i = 0; i < n; ++i) out.eta(i) = r.duals(2 * i + 1) - r.duals(2 * i);
  return out;
}

struct NspLp {
  LpStatus status;
  double value;  // max objective^T v_T subject to |v_{T^c}|_1 <= 1
  Vector v;      // optimiser in ker M (unit l2 ray when unbounded)
};

// max obj^T v_T over v = N c with |v_{T^c}|_1 <= 1.
inline NspLp nsp_lp(const Matrix& N, const std::vector<int>& T, const std::vector<int>& Tc, const Vector& obj) {
  const int k = static_cast<int>(N.cols());
  LinearProgram lp;
  Vector g = Vector::Zero(k);
  for (std::size_t i = 0; i < T.size(); ++i) g += obj(static_cast<Eigen::Index>(i)) * N.row(T[i]).transpose();
  std::vector<int> c(k), t(Tc.size());
  for (int j = 0; j < k; ++j) c[j] = lp.add_variable(-g(j), false);
  for (std::size_t i = 0; i < Tc.size(); ++i) t[i] = lp.add_variable(0.0);
  LinearProgram::Entries sum;
  for (std::size_t i = 0; i < Tc.size(); ++i) {
    LinearProgram::Entries up, lo;
    for (int j = 0; j < k; ++j) {
      double a = N(Tc[i], j);
      if (a == 0.0) continue;
      up.push_back({c[j], a});
      lo.push_back({c[j], -a});
    }
    up.push_back({t[i], -1.0});
    lo.push_back({t[i], -1.0});
    lp.add_constraint(std::move(up), LinearProgram::Sense::Le, 0.0);
    lp.add_constraint(std::move(lo), LinearProgram::Sense::Le, 0.0);
    sum.push_back({t[i], 1.0});
  }
  lp.add_constraint(std::move(sum), LinearProgram::Sense::Le, 1.0);
  LpResult r = lp.solve();
  NspLp out{r.status, 0.0, Vector::Zero(N.rows())};
  Vector cc(k);
  if (r.status == LpStatus::Unbounded) {
    for (int j = 0; j < k; ++j) cc(j) = r.ray(c[j]);
    out.v = N * cc;
    out.v /= out.v.norm();
    out.value = std::numeric_limits<double>::infinity();
  } else if (r.status == LpStatus::Optimal) {
    for (int j = 0; j < k; ++j) cc(j) = r.x(c[j]);
    out.v = N * cc;
    out.value = -r.objective;
  } else {
    throw Error(ErrorKind::InvalidInput, std::string("null space LP ended with status ") + to_string(r.status));
  }
  return out;
}

inline void check_budget(double work, double budget, const std::string& what) {
  if (work > budget)
    throw Error(ErrorKind::CombinatorialBudgetExceeded, what + " needs " + std::to_string(work) + " subproblems");
}

struct NspEntry {
  std::vector<int> T;
  double value;
  Vector v;
};

// Every (T, sign pattern) LP of the null space property; sign patterns modulo global sign.
inline NspCertificate nsp_scan(const Matrix& M, int s, const NspOptions& opt, std::vector<NspEntry>* failing) {
  validate_matrix(M);
  const int n = static_cast<int>(M.cols());
  require(s >= 1 && s <= n, "order s must lie in [1, n]");
  check_budget(binomial(n, s) * std::ldexp(1.0, s - 1), opt.budget, "null space property check");
  NspCertificate cert;
  cert.order = s;
  Matrix N = nullspace_basis(M);
  if (N.cols() == 0) return cert;
  cert.worst_value = -std::numeric_limits<double>::infinity();
  Vector worst_v;
  for (Combinations comb(n, s); !comb.done(); comb.next()) {
    const std::vector<int>& T = comb.current();
    std::vector<int> Tc = complement(T, n);
    for (std::uint64_t mask = 0; mask < (1ULL << (s - 1)); ++mask) {
      Vector sigma(s);
      sigma(0) = 1.0;
      for (int i = 1; i < s; ++i) sigma(i) = (mask >> (i - 1)) & 1ULL ? -1.0 : 1.0;
      NspLp r = nsp_lp(N, T, Tc, sigma);
      ++cert.lps_solved;
      if (r.value > cert.worst_value) {
        cert.worst_value = r.value;
        cert.worst_support = T;
        worst_v = r.v;
      }
      if (failing && r.value >= 1.0 - opt.margin) failing->push_back({T, r.value, r.v});
    }
  }
  cert.holds = cert.worst_value < 1.0 - opt.margin;
  if (!cert.holds) cert.witness = worst_v;
  return cert;
}

inline double recovery_error(const Matrix& A, const Frame& D, const Vector& z0, const SolverOptions& so) {
  SynthesisResult r = l1_synthesis(A, D, A * z0, 0.0, so);
  if (r.coefficients.status != SolverStatus::Optimal) return std::numeric_limits<double>::quiet_NaN();
  double nz = z0.norm();
  return nz > 0 ? (r.signal - z0).norm() / nz : r.signal.norm();
}

struct SignFailure {
  std::vector<int> T;
  Vector u;
  double g;
};

// Extreme rays of the sign cones of N_{T^c} c, as unit kernel vectors; callback returns false to stop.
inline bool for_each_sign_ray(const Matrix& N, const std::vector<int>& Tc,
                              const std::function<bool(const Vector&)>& f) {
  const int k = static_cast<int>(N.cols());
  Matrix NTc(static_cast<Eigen::Index>(Tc.size()), k);
  for (std::size_t i = 0; i < Tc.size(); ++i) NTc.row(static_cast<Eigen::Index>(i)) = N.row(Tc[i]);
  auto emit = [&](const Vector& c) {
    Vector u = N * c;
    u /= u.norm();
    return f(u) && f(-u);
  };
  if (k == 1) return emit(Vector::Ones(1));
  for (Combinations comb(static_cast<int>(Tc.size()), k - 1); !comb.done(); comb.next()) {
    Matrix R(k - 1, k);
    for (int i = 0; i < k - 1; ++i) R.row(i) = NTc.row(comb.current()[i]);
    Matrix Z = nullspace_basis(R, 1e-10);
    if (Z.cols() != 1) continue;
    if (!emit(Z.col(0))) return false;
  }
  return true;
}

// Exact scan of the kernel sign condition; returns failures (up to `limit`).
inline std::vector<SignFailure> kernel_sign_scan(const Matrix& N, int n, int s, const NspOptions& opt,
                                                 std::size_t limit) {
  std::vector<SignFailure> out;
  const int k = static_cast<int>(N.cols());
  if (k == 0) return out;
  for (Combinations comb(n, s); !comb.done(); comb.next()) {
    const std::vector<int>& T = comb.current();
    std::vector<int> Tc = complement(T, n);
    Matrix NTc(static_cast<Eigen::Index>(Tc.size()), k);
    for (std::size_t i = 0; i < Tc.size(); ++i) NTc.row(static_cast<Eigen::Index>(i)) = N.row(Tc[i]);
    if (Tc.empty() || rank(NTc, 1e-10) < k) {
      // Some kernel vector vanishes off T: the condition fails there.
      Vector c = Tc.empty() ? Vector(Vector::Unit(k, 0)) : Vector(nullspace_basis(NTc, 1e-10).col(0));
      Vector u = N * c;
      out.push_back({T, u / u.norm(), std::numeric_limits<double>::infinity()});
      if (out.size() >= limit) return out;
      continue;
    }
    bool go = for_each_sign_ray(N, Tc, [&](const Vector& u) {
      double g = kernel_l1_min_basis(N, u, T).value - l1_on(u, Tc);
      if (g >= -opt.margin) {
        out.push_back({T, u, g});
        if (out.size() >= limit) return false;
      }
      return true;
    });
    if (!go) return out;
  }
  return out;
}

// Searches D^{-1}(ker A \ {0}) for a strict violation of the frame null space condition
// and confirms it by an actual failed l1-synthesis recovery.
inline std::optional<Counterexample> find_dnsp_violation(const Matrix& A, const Frame& D, int s,
                                                         const std::vector<NspEntry>& failing,
                                                         const NspOptions& opt) {
  const Matrix& Dm = D.matrix();
  const int n = D.n();
  Matrix ND = nullspace_basis(Dm, D.tol());
  Matrix K = nullspace_basis(A * Dm);

  struct Cand {
    std::vector<int> T;
    Vector v;
    double g;
  };
  std::vector<Cand> cands;
  auto violation = [&](const Vector& v, const std::vector<int>& T) {
    return kernel_l1_min_basis(ND, v, T).value - l1_on(v, complement(T, n));
  };
  auto consider = [&](const std::vector<int>& T, const Vector& v) {
    if ((Dm * v).norm() <= 1e-10 * v.norm()) return;
    double g = violation(v, T) / v.lpNorm<1>();
    cands.push_back({T, v, g});
  };

  // (a) null space LP optima, improved by alternating ascent on max_eta eta^T v_T - |v_{T^c}|_1.
  std::vector<NspEntry> order = failing;
  std::sort(order.begin(), order.end(), [](const NspEntry& a, const NspEntry& b) { return a.value > b.value; });
  if (static_cast<int>(order.size()) > opt.max_witness_candidates) order.resize(opt.max_witness_candidates);
  for (const NspEntry& e : order) {
    std::vector<int> Tc = complement(e.T, n);
    Vector v = e.v;
    consider(e.T, v);
    double best = -std::numeric_limits<double>::infinity();
    for (int step = 0; step < opt.ascent_steps && std::isfinite(e.value); ++step) {
      KernelL1Min km = kernel_l1_min_basis(ND, v, e.T);
      Vector obj(e.T.size());
      for (std::size_t i = 0; i < e.T.size(); ++i) obj(static_cast<Eigen::Index>(i)) = km.eta(e.T[i]);
      NspLp r = nsp_lp(K, e.T, Tc, obj);
      if (r.status != LpStatus::Optimal || r.value <= best + 1e-12) break;
      best = r.value;
      v = r.v;
      consider(e.T, v);
    }
  }

  auto verify = [&]() -> std::optional<Counterexample> {
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.g > b.g; });
    int checked = 0;
    for (const Cand& c : cands) {
      if (c.g <= opt.margin || checked >= opt.max_witness_candidates) break;
      ++checked;
      Counterexample ce;
      ce.support = c.T;
      ce.coefficients = restrict_to(c.v, c.T);
      double scale = ce.coefficients.lpNorm<1>();
      if (scale == 0) continue;
      ce.coefficients /= scale;
      ce.signal = Dm * ce.coefficients;
      if (ce.signal.norm() == 0) continue;
      ce.violation = c.g;
      ce.recovery_error = recovery_error(A, D, ce.signal, opt.solver);
      if (ce.recovery_error > opt.failure_threshold) return ce;
    }
    return std::nullopt;
  };
  if (auto ce = verify()) return ce;
  cands.clear();

  // (b) only when (a) produced nothing: kernel sign failures of D lifted by a preimage of ker A
  // (the +-v + alpha u construction).
  if (K.cols() > ND.cols() && ND.cols() > 0 && ND.cols() <= opt.exact_nullity_limit &&
      binomial(n, s) * binomial(n - s, static_cast<int>(ND.cols()) - 1) <= opt.budget) {
    Matrix kerA = nullspace_basis(A);
    std::vector<Vector> lifts;
    for (Eigen::Index j = 0; j < kerA.cols(); ++j) lifts.push_back(least_squares(Dm, kerA.col(j)));
    for (const SignFailure& f : kernel_sign_scan(ND, n, s, opt, 16)) {
      double umin = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < f.u.size(); ++i)
        if (std::abs(f.u(i)) > 1e-12) umin = std::min(umin, std::abs(f.u(i)));
      for (const Vector& v : lifts) {
        double alpha = 2.0 * v.cwiseAbs().maxCoeff() / umin;
        consider(f.T, Vector(v + alpha * f.u));
        consider(f.T, Vector(-v + alpha * f.u));
      }
    }
  }

  return verify();
}

}  // namespace detail

// Exact decision of the null space property of order s for M.
inline NspCertificate nsp_check(const Matrix& M, int s, const NspOptions& opt = {}) {
  return detail::nsp_scan(M, s, opt, nullptr);
}

// min over u in ker D of |w_T + u|_1.
inline KernelL1Min kernel_l1_min(const Frame& D, const Vector& w, const std::vector<int>& T) {
  require(w.size() == D.n(), "kernel_l1_min: w must have length n");
  for (int t : T) require(t >= 0 && t < D.n(), "kernel_l1_min: support index out of range");
  return detail::kernel_l1_min_basis(nullspace_basis(D.matrix(), D.tol()), w, T);
}

inline void check_pair(const Matrix& A, const Frame& D) {
  validate_matrix(A, "sensing matrix");
  if (A.cols() != D.d())
    throw Error(ErrorKind::InvalidInput,
                "sensing matrix " + shape_str(A) + " does not match frame " + shape_str(D.matrix()));
}

inline DnspVerdict dnsp_certify_fullspark(const Matrix& A, const Frame& D, int s, const NspOptions& opt = {}) {
  check_pair(A, D);
  if (!is_full_spark(D, opt.budget)) throw Error(ErrorKind::NotFullSpark, "frame is not full spark");
  DnspVerdict out;
  out.order = s;
  out.method = DnspMethod::FullSparkEquivalence;
  out.rank_A = rank(A);
  // injective A recovers every signal, and the equivalence needs ker A != {0}
  if (out.rank_A == D.d()) {
    out.verdict = DnspOutcome::Certified;
    return out;
  }
  std::vector<detail::NspEntry> failing;
  NspCertificate cert = detail::nsp_scan(A * D.matrix(), s, opt, &failing);
  if (cert.holds) {
    out.verdict = DnspOutcome::Certified;
    return out;
  }
  out.verdict = DnspOutcome::Refuted;
  out.counterexample = detail::find_dnsp_violation(A, D, s, failing, opt);
  return out;
}

// Randomised search for a failed recovery; can refute but never certify.
inline DnspVerdict dnsp_falsify(const Matrix& A, const Frame& D, int s, int trials, std::uint64_t seed,
                                const NspOptions& opt = {}) {
  check_pair(A, D);
  require(trials >= 1, "dnsp_falsify needs at least one trial");
  const int n = D.n();
  require(s >= 1 && s <= n, "order s must lie in [1, n]");
  DnspVerdict out;
  out.order = s;
  out.method = DnspMethod::Falsification;
  out.rank_A = rank(A);

  if (binomial(n, s) * std::ldexp(1.0, s - 1) <= opt.budget) {
    std::vector<detail::NspEntry> failing;
    NspCertificate cert = detail::nsp_scan(A * D.matrix(), s, opt, &failing);
    if (!cert.holds) {
      auto ce = detail::find_dnsp_violation(A, D, s, failing, opt);
      if (ce) {
        out.verdict = DnspOutcome::Refuted;
        out.counterexample = ce;
        return out;
      }
    }
  }

  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    std::vector<int> T = random_subset(rng, n, s);
    Vector x0 = Vector::Zero(n);
    Vector vals = gaussian_vector(rng, s);
    for (int i = 0; i < s; ++i) x0(T[i]) = (t % 2 == 0) ? vals(i) : (vals(i) >= 0 ? 1.0 : -1.0);
    Vector z0 = D.matrix() * x0;
    out.trials_run = t + 1;
    if (z0.norm() <= 1e-12 * x0.norm()) continue;
    double err = detail::recovery_error(A, D, z0, opt.solver);
    if (err > opt.failure_threshold) {
      out.verdict = DnspOutcome::Refuted;
      out.counterexample = Counterexample{T, x0, z0, err, std::numeric_limits<double>::quiet_NaN()};
      return out;
    }
  }
  out.verdict = DnspOutcome::Undetermined;
  return out;
}

// rank(D_T) = rank(A D_T) for all |T| = min(2s, n).
inline bool injectivity_check(const Matrix& A, const Frame& D, int s, double budget = kDefaultCombinatorialBudget) {
  check_pair(A, D);
  const int n = D.n();
  require(s >= 1, "order s must be positive");
  const int k = std::min(2 * s, n);
  detail::check_budget(binomial(n, k), budget, "injectivity check");
  Matrix AD = A * D.matrix();
  for (Combinations c(n, k); !c.done(); c.next()) {
    Matrix DT = select_columns(D.matrix(), c.current());
    if (rank(DT, D.tol()) != rank(Matrix(A * DT), D.tol())) return false;
  }
  return true;
}

// For all u in ker D and |T| = s: exists u' in ker D with |u_T + u'|_1 < |u_{T^c}|_1.
inline bool kernel_sign_condition(const Frame& D, int s, const NspOptions& opt = {}) {
  const int n = D.n();
  require(s >= 1 && s <= n, "order s must lie in [1, n]");
  Matrix N = nullspace_basis(D.matrix(), D.tol());
  const int k = static_cast<int>(N.cols());
  if (k == 0) return true;
  if (k <= opt.exact_nullity_limit) {
    detail::check_budget(binomial(n, s) * 2.0 * binomial(n - s, k - 1), opt.budget, "kernel sign condition");
    return detail::kernel_sign_scan(N, n, s, opt, 1).empty();
  }
  detail::check_budget(binomial(n, s) * opt.sign_samples, opt.budget, "sampled kernel sign condition");
  Rng rng(opt.seed);
  for (int i = 0; i < opt.sign_samples; ++i) {
    Vector u = N * gaussian_vector(rng, k);
    u /= u.norm();
    for (Combinations c(n, s); !c.done(); c.next()) {
      double g = detail::kernel_l1_min_basis(N, u, c.current()).value - detail::l1_on(u, complement(c.current(), n));
      if (g >= -opt.margin) return false;
    }
  }
  throw Error(ErrorKind::ExactModeUnavailable,
              "kernel nullity " + std::to_string(k) + " exceeds the exact limit and sampling found no violation");
}

struct CoherenceBound {
  double bound = 0;
  double coherence = 0;
  bool satisfied = false;
};

// mu(D) < 1 - 2 A^2 / (n B), on the column-normalised frame.
inline CoherenceBound coherence_bound_check(const Frame& D) {
  Frame Dn(normalized_columns(D.matrix()), D.tol());
  auto [A, B] = frame_bounds(Dn);
  CoherenceBound out;
  out.bound = 1.0 - 2.0 * A * A / (Dn.n() * B);
  out.coherence = coherence(Dn);
  out.satisfied = out.coherence < out.bound;
  return out;
}

}  // namespace dictcs
