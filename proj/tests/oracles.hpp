#pragma once
// Independent reference computations used by the tests. Deliberately naive.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rank by Gaussian elimination with partial pivoting and an absolute threshold.
inline int gauss_rank(MatrixXd M, double tol = 1e-9) {
  int r = 0;
  for (int c = 0; c < M.cols() && r < M.rows(); ++c) {
    int p = r;
    for (int i = r; i < M.rows(); ++i)
      if (std::abs(M(i, c)) > std::abs(M(p, c))) p = i;
    if (std::abs(M(p, c)) <= tol) continue;
    M.row(r).swap(M.row(p));
    for (int i = r + 1; i < M.rows(); ++i) M.row(i) -= (M(i, c) / M(r, c)) * M.row(r);
    ++r;
  }
  return r;
}

inline void subsets(int n, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(k);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      f(idx);
      return;
    }
    for (int i = start; i < n; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

// min c^T x, A x = b, x >= 0 by enumerating all basic feasible solutions.
inline double lp_vertex_min(const MatrixXd& A, const VectorXd& b, const VectorXd& c, VectorXd* argmin = nullptr) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  double best = std::numeric_limits<double>::infinity();
  subsets(n, m, [&](const std::vector<int>& B) {
    MatrixXd AB(m, m);
    for (int i = 0; i < m; ++i) AB.col(i) = A.col(B[i]);
    Eigen::FullPivLU<MatrixXd> lu(AB);
    if (lu.rank() < m) return;
    VectorXd xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) return;
    VectorXd x = VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) x(B[i]) = xb(i);
    double v = c.dot(x);
    if (v < best) {
      best = v;
      if (argmin) *argmin = x;
    }
  });
  return best;
}

// min ||x||_1 s.t. M x = y by vertex enumeration on the split form.
inline double l1_min_bruteforce(const MatrixXd& M, const VectorXd& y) {
  const int m = static_cast<int>(M.rows()), n = static_cast<int>(M.cols());
  MatrixXd A(m, 2 * n);
  A << M, -M;
  return lp_vertex_min(A, y, VectorXd::Ones(2 * n));
}

// Sum of all but the s largest magnitudes, by trying every support.
inline double best_s_term_bruteforce(const VectorXd& x, int s) {
  double best = std::numeric_limits<double>::infinity();
  subsets(static_cast<int>(x.size()), s, [&](const std::vector<int>& T) {
    VectorXd r = x;
    for (int t : T) r(t) = 0;
    best = std::min(best, r.cwiseAbs().sum());
  });
  return best;
}

// min over t of sum_i |a_i + t b_i| (1-D convex piecewise linear; optimum at a breakpoint).
inline double l1_line_min(const VectorXd& a, const VectorXd& b) {
  double best = a.cwiseAbs().sum();
  for (int i = 0; i < a.size(); ++i) {
    if (b(i) == 0) continue;
    double t = -a(i) / b(i);
    best = std::min(best, (a + t * b).cwiseAbs().sum());
  }
  return best;
}

inline VectorXd random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.norm();
}

}  // namespace oracle
