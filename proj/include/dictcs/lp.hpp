#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "dictcs/matcore.hpp"

namespace dictcs {

enum class LpStatus { Optimal, Infeasible, Unbounded, MaxIterations };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::MaxIterations: return "MaxIterations";
  }
  return "Unknown";
}

struct LpOptions {
  double feas_tol = 1e-9;     // phase-I acceptance, scaled by 1 + |b|_inf
  double cost_tol = 1e-11;    // reduced-cost optimality threshold
  double pivot_tol = 1e-9;
  int max_iter = 100000;
  int stall_limit = 50;       // degenerate pivots before switching to Bland's rule
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;          // user variables
  double objective = 0.0;
  Vector duals;      // one multiplier per constraint: c - sum_i duals_i a_i is dual feasible
  Vector ray;        // improving direction in user variables when Unbounded
  int iterations = 0;
};

// min c^T x subject to row constraints, variables nonnegative or free.
// Dense revised simplex, two phases, basis refactorised at every pivot.
class LinearProgram {
 public:
  enum class Sense { Le, Eq, Ge };
  using Entries = std::vector<std::pair<int, double>>;

  int add_variable(double cost, bool nonneg = true) {
    cost_.push_back(cost);
    nonneg_.push_back(nonneg);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_constraint(Entries entries, Sense sense, double rhs) {
    rows_.push_back({std::move(entries), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
  }

  int num_variables() const { return static_cast<int>(cost_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }

  LpResult solve(const LpOptions& opt = {}) const;

 private:
  struct Row {
    Entries entries;
    Sense sense;
    double rhs;
  };
  std::vector<double> cost_;
  std::vector<bool> nonneg_;
  std::vector<Row> rows_;
};

namespace detail {

enum class PhaseOutcome { Optimal, Unbounded, MaxIterations };

struct SimplexState {
  const Matrix& A;
  const Vector& b;
  std::vector<int>& basis;
  const std::vector<char>& barred;  // columns that may not enter
  const std::vector<char>& artificial;
  int& iterations;
};

inline PhaseOutcome run_phase(SimplexState st, const Vector& c, const LpOptions& opt, Vector& y,
                              Vector& xB, int& enter_col, Vector& direction) {
  const Eigen::Index m = st.A.rows(), N = st.A.cols();
  std::vector<char> in_basis(N, 0);
  for (int j : st.basis) in_basis[j] = 1;
  int stalls = 0;
  bool bland = false;
  Matrix B(m, m);
  Vector cB(m);
  for (;;) {
    for (Eigen::Index i = 0; i < m; ++i) {
      B.col(i) = st.A.col(st.basis[i]);
      cB(i) = c(st.basis[i]);
    }
    Eigen::PartialPivLU<Matrix> lu(B);
    xB = lu.solve(st.b);
    y = lu.transpose().solve(cB);
    if (st.iterations >= opt.max_iter) return PhaseOutcome::MaxIterations;

    Vector d = c - st.A.transpose() * y;
    int q = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (in_basis[j] || st.barred[j]) continue;
      double thr = -opt.cost_tol * (1.0 + std::abs(c(j)));
      if (d(j) >= thr) continue;
      if (bland) {
        q = static_cast<int>(j);
        break;
      }
      if (d(j) < best) {
        best = d(j);
        q = static_cast<int>(j);
      }
    }
    if (q < 0) return PhaseOutcome::Optimal;

    Vector alpha = lu.solve(st.A.col(q));
    const double ptol = opt.pivot_tol * std::max(1.0, alpha.cwiseAbs().maxCoeff());
    int r = -1;
    // A basic artificial stuck at zero must leave before it can move off zero.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (st.artificial[st.basis[i]] && std::abs(alpha(i)) > ptol && std::abs(xB(i)) <= opt.feas_tol &&
          st.barred[st.basis[i]]) {
        if (r < 0 || std::abs(alpha(i)) > std::abs(alpha(r))) r = static_cast<int>(i);
      }
    }
    if (r < 0) {
      if (bland) {
        double tmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
          if (alpha(i) <= ptol) continue;
          double t = std::max(0.0, xB(i)) / alpha(i);
          if (t < tmin - 1e-14 || (std::abs(t - tmin) <= 1e-14 && r >= 0 && st.basis[i] < st.basis[r])) {
            tmin = t;
            r = static_cast<int>(i);
          }
        }
      } else {
        // Harris two-pass ratio test.
        double tmax = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i)
          if (alpha(i) > ptol) tmax = std::min(tmax, (std::max(0.0, xB(i)) + opt.feas_tol) / alpha(i));
        double amax = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          if (alpha(i) <= ptol) continue;
          if (std::max(0.0, xB(i)) / alpha(i) <= tmax && alpha(i) > amax) {
            amax = alpha(i);
            r = static_cast<int>(i);
          }
        }
      }
    }
    if (r < 0) {
      enter_col = q;
      direction = alpha;
      return PhaseOutcome::Unbounded;
    }
    double step = std::max(0.0, xB(r)) / std::max(std::abs(alpha(r)), 1e-300);
    if (step <= 1e-14) {
      if (++stalls > opt.stall_limit) bland = true;
    } else {
      stalls = 0;
    }
    in_basis[st.basis[r]] = 0;
    st.basis[r] = q;
    in_basis[q] = 1;
    ++st.iterations;
  }
}

}  // namespace detail

inline LpResult LinearProgram::solve(const LpOptions& opt) const {
  const int nu = num_variables();
  const int m = num_constraints();
  LpResult res;
  res.x = Vector::Zero(nu);
  res.duals = Vector::Zero(m);

  // Column layout: user positive parts, negative parts of free variables, slacks, artificials.
  std::vector<int> pos(nu), neg(nu, -1);
  int ncol = 0;
  for (int j = 0; j < nu; ++j) pos[j] = ncol++;
  for (int j = 0; j < nu; ++j)
    if (!nonneg_[j]) neg[j] = ncol++;
  std::vector<int> slack(m, -1);
  for (int i = 0; i < m; ++i)
    if (rows_[i].sense != Sense::Eq) slack[i] = ncol++;
  const int n_struct = ncol;

  Vector flip = Vector::Ones(m);
  for (int i = 0; i < m; ++i)
    if (rows_[i].rhs < 0) flip(i) = -1.0;

  std::vector<int> basis(m, -1);
  int nart = 0;
  for (int i = 0; i < m; ++i) {
    bool slack_ok = slack[i] >= 0 && ((rows_[i].sense == Sense::Le) == (flip(i) > 0));
    if (slack_ok)
      basis[i] = slack[i];
    else
      basis[i] = n_struct + nart++;
  }
  const int N = n_struct + nart;
  Matrix A = Matrix::Zero(m, N);
  Vector b(m), c = Vector::Zero(N);
  std::vector<char> artificial(N, 0);
  for (int i = 0; i < m; ++i) {
    for (auto [j, v] : rows_[i].entries) {
      A(i, pos[j]) += flip(i) * v;
      if (neg[j] >= 0) A(i, neg[j]) -= flip(i) * v;
    }
    if (slack[i] >= 0) A(i, slack[i]) = flip(i) * (rows_[i].sense == Sense::Le ? 1.0 : -1.0);
    b(i) = flip(i) * rows_[i].rhs;
    if (basis[i] >= n_struct) {
      A(i, basis[i]) = 1.0;
      artificial[basis[i]] = 1;
    }
  }
  for (int j = 0; j < nu; ++j) {
    c(pos[j]) = cost_[j];
    if (neg[j] >= 0) c(neg[j]) = -cost_[j];
  }

  int iterations = 0;
  Vector y, xB, dir;
  int q = -1;
  std::vector<char> none(N, 0);

  if (nart > 0) {
    Vector c1 = Vector::Zero(N);
    for (int j = n_struct; j < N; ++j) c1(j) = 1.0;
    auto out = detail::run_phase({A, b, basis, none, artificial, iterations}, c1, opt, y, xB, q, dir);
    res.iterations = iterations;
    if (out == detail::PhaseOutcome::MaxIterations) {
      res.status = LpStatus::MaxIterations;
      return res;
    }
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (artificial[basis[i]]) infeas += std::max(0.0, xB(i));
    if (infeas > opt.feas_tol * (1.0 + b.cwiseAbs().maxCoeff())) {
      res.status = LpStatus::Infeasible;
      return res;
    }
  }

  auto out = detail::run_phase({A, b, basis, artificial, artificial, iterations}, c, opt, y, xB, q, dir);
  res.iterations = iterations;

  Vector xs = Vector::Zero(N);
  for (int i = 0; i < m; ++i) xs(basis[i]) = xB(i);
  auto to_user = [&](const Vector& v) {
    Vector u(nu);
    for (int j = 0; j < nu; ++j) u(j) = v(pos[j]) - (neg[j] >= 0 ? v(neg[j]) : 0.0);
    return u;
  };
  res.x = to_user(xs.cwiseMax(0.0));
  for (int j = 0; j < nu; ++j) res.objective += cost_[j] * res.x(j);
  res.duals = y.cwiseProduct(flip);

  if (out == detail::PhaseOutcome::Unbounded) {
    Vector r = Vector::Zero(N);
    r(q) = 1.0;
    for (int i = 0; i < m; ++i) r(basis[i]) -= dir(i);
    res.ray = to_user(r);
    res.status = LpStatus::Unbounded;
  } else if (out == detail::PhaseOutcome::MaxIterations) {
    res.status = LpStatus::MaxIterations;
  } else {
    res.status = LpStatus::Optimal;
  }
  return res;
}

}  // namespace dictcs
