#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dictcs/combinatorics.hpp"
#include "dictcs/error.hpp"
#include "dictcs/frames.hpp"
#include "dictcs/lp.hpp"
#include "dictcs/matcore.hpp"

namespace dictcs {

struct SolverOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-8;
  int max_iter = 100000;
  double rho = 1.0;         // initial penalty of the splitting scheme
  int gap_check_every = 10;
  int adapt_every = 50;      // penalty is rebalanced on this period ...
  int adapt_until = 20000;   // ... and frozen afterwards
};

enum class SolverStatus { Optimal, MaxIterations, Infeasible };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::MaxIterations: return "MaxIterations";
    case SolverStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

struct SolverReport {
  Vector minimizer;
  double objective = 0;
  double feasibility_residual = 0;  // distance of M x from the feasible ball around y
  double optimality_gap = 0;        // primal minus certified dual objective, over 1 + objective
  int iterations = 0;
  SolverStatus status = SolverStatus::Infeasible;
  Vector dual;                      // lambda in R^rows, dual feasible after scaling
  double dual_objective = 0;
};

struct SynthesisResult {
  SolverReport coefficients;
  Vector signal;
};

namespace detail {

inline void check_rhs(const Matrix& M, const Vector& y) {
  validate_matrix(M);
  if (y.size() != M.rows())
    throw Error(ErrorKind::InvalidInput, "right-hand side has length " + std::to_string(y.size()) +
                                             " but matrix is " + shape_str(M));
  if (!y.allFinite()) throw Error(ErrorKind::InvalidInput, "right-hand side has non-finite entries");
}

inline Vector soft_threshold(const Vector& v, double t) {
  return v.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
}

inline Vector project_ball(const Vector& v, const Vector& c, double r) {
  Vector d = v - c;
  double n = d.norm();
  return n <= r ? v : Vector(c + d * (r / n));
}

inline double ball_violation(const Vector& v, const Vector& c, double r) {
  return std::max(0.0, (v - c).norm() - r);
}

// Operator splitting for  min ||L z||_1  s.t.  ||M z - y||_2 <= eps,
// with L = I (kind Identity) or L = D^T (kind Analysis, D given).
// Splits a = L z, b = M z; penalty adapted by residual balancing.
struct SplittingProblem {
  const Matrix& M;
  const Vector& y;
  double eps;
  const Matrix* D = nullptr;  // analysis operator L = D^T when set
};

// Exact minimiser of ||x||_1 over ||M x - y|| <= eps restricted to the face fixed by the signs of a,
// with the multiplier that certifies it. Empty when the face is degenerate or the signs do not persist.
inline std::optional<std::pair<Vector, Vector>> face_solution(const Matrix& M, const Vector& y, double eps,
                                                              const Vector& a) {
  std::vector<int> S;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != 0.0) S.push_back(static_cast<int>(i));
  if (S.empty() || static_cast<Eigen::Index>(S.size()) > M.rows()) return std::nullopt;
  Matrix MS(M.rows(), S.size());
  Vector sg(S.size());
  for (std::size_t j = 0; j < S.size(); ++j) {
    MS.col(j) = M.col(S[j]);
    sg(j) = a(S[j]) > 0 ? 1.0 : -1.0;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(MS);
  if (qr.rank() < static_cast<Eigen::Index>(S.size())) return std::nullopt;
  Matrix G = MS.transpose() * MS;
  Eigen::LDLT<Matrix> ldlt(G);
  Vector Gs = ldlt.solve(sg), xls = qr.solve(y);
  Vector rperp = y - MS * xls;
  Vector xS, lambda;
  if (eps > 0) {
    double slack = eps * eps - rperp.squaredNorm(), q = sg.dot(Gs);
    if (slack <= 0 || q <= 0) return std::nullopt;
    double tau = std::sqrt(slack / q);
    xS = xls - tau * Gs;
    lambda = (y - MS * xS) / tau;
  } else {
    if (rperp.norm() > 1e-12 * (1 + y.norm())) return std::nullopt;
    xS = xls;
    lambda = MS * Gs;
  }
  for (std::size_t j = 0; j < S.size(); ++j)
    if (xS(j) * sg(j) <= 0) return std::nullopt;
  Vector x = Vector::Zero(M.cols());
  for (std::size_t j = 0; j < S.size(); ++j) x(S[j]) = xS(j);
  return std::pair{x, lambda};
}

inline SolverReport split_l1(const SplittingProblem& P, const SolverOptions& opt) {
  const Matrix& M = P.M;
  const Vector& y = P.y;
  const Eigen::Index nz = M.cols();
  const bool analysis = P.D != nullptr;
  auto applyL = [&](const Vector& z) -> Vector { return analysis ? Vector(P.D->transpose() * z) : z; };
  auto applyLt = [&](const Vector& a) -> Vector { return analysis ? Vector(*P.D * a) : a; };
  const Eigen::Index na = analysis ? P.D->cols() : nz;

  SolverReport rep;
  rep.minimizer = Vector::Zero(nz);
  rep.dual = Vector::Zero(M.rows());

  // Feasibility of the constraint set, and a correction map used to polish the final iterate.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
  {
    Vector z_ls = cod.solve(y);
    double res = (M * z_ls - y).norm();
    if (res > P.eps + opt.feas_tol * (1.0 + y.norm())) {
      rep.status = SolverStatus::Infeasible;
      rep.feasibility_residual = res - P.eps;
      return rep;
    }
  }
  if (y.norm() <= P.eps) {
    rep.status = SolverStatus::Optimal;
    return rep;
  }

  Matrix H = (analysis ? Matrix(*P.D * P.D->transpose()) : Matrix::Identity(nz, nz)) + M.transpose() * M;
  Eigen::LLT<Matrix> llt(H);

  std::optional<Eigen::LLT<Matrix>> DDt;
  if (analysis) DDt.emplace(*P.D * P.D->transpose());

  Vector z = Vector::Zero(nz), a = Vector::Zero(na), b = Vector::Zero(M.rows());
  Vector ua = Vector::Zero(na), ub = Vector::Zero(M.rows());
  double rho = opt.rho;
  const double tol = 1e-9 * (1.0 + y.norm());

  // Certified dual value from the current multipliers; returns (dual objective, lambda).
  auto certificate = [&](double rho_now) {
    Vector lambda = -rho_now * ub;
    Vector nu = rho_now * ua;
    Vector Mtl = M.transpose() * lambda;
    if (analysis) {
      nu += P.D->transpose() * DDt->solve(Mtl - *P.D * nu);
    } else {
      nu = Mtl;
    }
    double s = std::max(1.0, nu.cwiseAbs().maxCoeff());
    lambda /= s;
    return std::pair{y.dot(lambda) - P.eps * lambda.norm(), lambda};
  };

  auto dual_value = [&](Vector lambda) {
    double sc = std::max(1.0, (M.transpose() * lambda).cwiseAbs().maxCoeff());
    lambda /= sc;
    return std::pair{y.dot(lambda) - P.eps * lambda.norm(), lambda};
  };

  auto finalize = [&](const Vector& zf, const Vector& af, int iters) {
    // Pull the iterate onto the constraint set along the minimum-norm correction.
    Vector Mz = M * zf;
    Vector target = project_ball(Mz, y, P.eps);
    Vector zc = zf - cod.solve(Mz - target);
    rep.minimizer = zc;
    rep.objective = applyL(zc).lpNorm<1>();
    rep.feasibility_residual = ball_violation(M * zc, y, P.eps);
    auto [dval, lambda] = certificate(rho);
    if (!analysis) {
      if (auto face = face_solution(M, y, P.eps, af)) {
        double obj = face->first.lpNorm<1>(), res = ball_violation(M * face->first, y, P.eps);
        if (res <= opt.feas_tol && obj < rep.objective) {
          rep.minimizer = face->first;
          rep.objective = obj;
          rep.feasibility_residual = res;
        }
        auto [fv, fl] = dual_value(face->second);
        if (fv > dval) dval = fv, lambda = fl;
      }
    }
    rep.dual = lambda;
    rep.dual_objective = dval;
    rep.optimality_gap = std::max(0.0, rep.objective - dval) / (1.0 + rep.objective);
    rep.iterations = iters;
    bool ok = rep.feasibility_residual <= opt.feas_tol && rep.optimality_gap <= opt.opt_tol;
    rep.status = ok ? SolverStatus::Optimal : SolverStatus::MaxIterations;
  };

  for (int it = 1; it <= opt.max_iter; ++it) {
    z = llt.solve(M.transpose() * (b - ub) + applyLt(a - ua));
    Vector Lz = applyL(z), Mz = M * z;
    Vector a_old = a, b_old = b;
    a = soft_threshold(Lz + ua, 1.0 / rho);
    b = project_ball(Mz + ub, y, P.eps);
    ua += Lz - a;
    ub += Mz - b;

    double r = std::sqrt((Lz - a).squaredNorm() + (Mz - b).squaredNorm());
    double s = rho * (applyLt(a - a_old) + M.transpose() * (b - b_old)).norm();

    if (r <= tol && s <= tol && it % opt.gap_check_every == 0) {
      finalize(z, a, it);
      // Aim below the reported tolerance so objectives agree across routes with margin.
      if (rep.status == SolverStatus::Optimal && rep.optimality_gap <= 0.1 * opt.opt_tol) return rep;
    }
    if (it % opt.adapt_every != 0 || it > opt.adapt_until) continue;
    if (r > 10.0 * s) {
      rho *= 2.0;
      ua /= 2.0;
      ub /= 2.0;
    } else if (s > 10.0 * r) {
      rho /= 2.0;
      ua *= 2.0;
      ub *= 2.0;
    }
  }
  finalize(z, a, opt.max_iter);
  return rep;
}

}  // namespace detail

// min ||x||_1  s.t.  M x = y, solved exactly as a linear program with a dual certificate.
inline SolverReport basis_pursuit(const Matrix& M, const Vector& y, const SolverOptions& opt = {}) {
  detail::check_rhs(M, y);
  const int m = static_cast<int>(M.rows()), n = static_cast<int>(M.cols());
  LinearProgram lp;
  for (int j = 0; j < 2 * n; ++j) lp.add_variable(1.0);
  for (int i = 0; i < m; ++i) {
    LinearProgram::Entries e;
    for (int j = 0; j < n; ++j) {
      if (M(i, j) == 0.0) continue;
      e.push_back({j, M(i, j)});
      e.push_back({n + j, -M(i, j)});
    }
    lp.add_constraint(std::move(e), LinearProgram::Sense::Eq, y(i));
  }
  LpOptions lo;
  lo.max_iter = opt.max_iter;
  lo.feas_tol = opt.feas_tol;
  LpResult r = lp.solve(lo);

  SolverReport rep;
  rep.iterations = r.iterations;
  rep.minimizer = r.x.head(n) - r.x.tail(n);
  rep.objective = rep.minimizer.lpNorm<1>();
  rep.feasibility_residual = (M * rep.minimizer - y).norm();
  if (r.status == LpStatus::Infeasible) {
    rep.status = SolverStatus::Infeasible;
    rep.minimizer.setZero();
    rep.objective = 0;
    rep.feasibility_residual = (M * least_squares(M, y) - y).norm();
    return rep;
  }
  double s = std::max(1.0, (M.transpose() * r.duals).cwiseAbs().maxCoeff());
  rep.dual = r.duals / s;
  rep.dual_objective = y.dot(rep.dual);
  rep.optimality_gap = std::max(0.0, rep.objective - rep.dual_objective) / (1.0 + rep.objective);
  bool ok = r.status == LpStatus::Optimal && rep.feasibility_residual <= opt.feas_tol &&
            rep.optimality_gap <= opt.opt_tol;
  rep.status = ok ? SolverStatus::Optimal : SolverStatus::MaxIterations;
  return rep;
}

// min ||x||_1  s.t.  ||M x - y||_2 <= eps, by the splitting scheme (also for eps = 0).
inline SolverReport bpdn(const Matrix& M, const Vector& y, double eps, const SolverOptions& opt = {}) {
  detail::check_rhs(M, y);
  require(eps >= 0 && std::isfinite(eps), "eps must be finite and nonnegative");
  return detail::split_l1({M, y, eps, nullptr}, opt);
}

inline void check_synthesis_dims(const Matrix& A, const Frame& D, const Vector& y) {
  validate_matrix(A, "sensing matrix");
  if (A.cols() != D.d())
    throw Error(ErrorKind::InvalidInput, "sensing matrix " + shape_str(A) + " does not match frame " + shape_str(D.matrix()));
  if (y.size() != A.rows())
    throw Error(ErrorKind::InvalidInput, "measurement length " + std::to_string(y.size()) + " does not match sensing matrix " + shape_str(A));
}

// Decode coefficients by l1 minimisation over A D; the signal is D x.
inline SynthesisResult l1_synthesis(const Matrix& A, const Frame& D, const Vector& y, double eps,
                                    const SolverOptions& opt = {}) {
  check_synthesis_dims(A, D, y);
  require(eps >= 0 && std::isfinite(eps), "eps must be finite and nonnegative");
  Matrix AD = A * D.matrix();
  SynthesisResult out;
  out.coefficients = eps == 0.0 ? basis_pursuit(AD, y, opt) : bpdn(AD, y, eps, opt);
  out.signal = D.matrix() * out.coefficients.minimizer;
  return out;
}

// min ||D^T z||_1  s.t.  ||A z - y||_2 <= eps; minimizer is the signal.
inline SolverReport l1_analysis(const Matrix& A, const Frame& D, const Vector& y, double eps,
                                const SolverOptions& opt = {}) {
  check_synthesis_dims(A, D, y);
  require(eps >= 0 && std::isfinite(eps), "eps must be finite and nonnegative");
  return detail::split_l1({A, y, eps, &D.matrix()}, opt);
}

struct L0Result {
  Vector x;
  int sparsity = 0;
};

// Exhaustive minimal-support decoder: smallest support whose least-squares fit is exact.
inline L0Result l0_oracle(const Matrix& A, const Frame& D, const Vector& y, int s_max,
                          double budget = kDefaultCombinatorialBudget) {
  check_synthesis_dims(A, D, y);
  const int n = D.n();
  require(s_max >= 0 && s_max <= n, "s_max must lie in [0, n]");
  double work = 0;
  for (int k = 0; k <= s_max; ++k) work += binomial(n, k);
  if (work > budget)
    throw Error(ErrorKind::CombinatorialBudgetExceeded, "l0 oracle needs " + std::to_string(work) + " supports");
  const double fit = 1e-8 * (1.0 + y.norm());
  L0Result r;
  r.x = Vector::Zero(n);
  if (y.norm() <= fit) return r;
  Matrix AD = A * D.matrix();
  for (int k = 1; k <= s_max; ++k) {
    for (Combinations c(n, k); !c.done(); c.next()) {
      Matrix S = select_columns(AD, c.current());
      Vector xs = least_squares(S, y);
      if ((S * xs - y).norm() <= fit) {
        for (int i = 0; i < k; ++i) r.x(c.current()[i]) = xs(i);
        r.sparsity = k;
        return r;
      }
    }
  }
  throw Error(ErrorKind::NoSolution, "no support of size <= " + std::to_string(s_max) + " fits the measurements");
}

// Dual frame whose analysis coefficients of z0 are exactly x0 (returned as an d x n matrix F, F^T z0 = x0).
inline Matrix sparse_dual(const Frame& D, const Vector& z0, const Vector& x0) {
  require(z0.size() == D.d() && x0.size() == D.n(), "sparse_dual: dimension mismatch");
  const Matrix& M = D.matrix();
  if (z0.norm() == 0.0) throw Error(ErrorKind::DegenerateSignal, "z0 is zero");
  if ((M * x0 - z0).norm() > 1e-9 * (1.0 + z0.norm()))
    throw Error(ErrorKind::InconsistentRepresentation, "D x0 does not reproduce z0");
  Eigen::LLT<Matrix> G(M * M.transpose());
  Matrix Fc_t = M.transpose() * G.solve(Matrix::Identity(D.d(), D.d()));  // D^T (D D^T)^{-1}
  Vector xc = Fc_t * z0;
  Matrix Ft = Fc_t + (x0 - xc) * z0.transpose() / z0.squaredNorm();
  return Ft.transpose();
}

}  // namespace dictcs
