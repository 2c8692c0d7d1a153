#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dictcs/error.hpp"

namespace dictcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-12;

inline void validate_matrix(const Matrix& M, const char* name = "matrix") {
  if (M.rows() < 1 || M.cols() < 1)
    throw Error(ErrorKind::InvalidInput, std::string(name) + " must have at least one row and column");
  if (!M.allFinite()) throw Error(ErrorKind::InvalidInput, std::string(name) + " has non-finite entries");
}

inline std::string shape_str(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

struct SvdResult {
  Matrix left_vectors;
  Vector singular_values;  // nonincreasing
  Matrix right_vectors;
};

inline SvdResult svd(const Matrix& M) {
  validate_matrix(M);
  Eigen::BDCSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

inline double rank_threshold(const Vector& sv, Eigen::Index rows, Eigen::Index cols, double tol) {
  double smax = sv.size() ? sv(0) : 0.0;
  return tol * smax * static_cast<double>(std::max(rows, cols));
}

inline int rank(const Matrix& M, double tol = kDefaultRankTol) {
  require(tol > 0, "rank tolerance must be positive");
  validate_matrix(M);
  Eigen::JacobiSVD<Matrix> dec(M);
  const Vector& sv = dec.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  double thr = rank_threshold(sv, M.rows(), M.cols(), tol);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) ++r;
  return r;
}

inline double smallest_positive_singular(const Matrix& M, double tol = kDefaultRankTol) {
  validate_matrix(M);
  Eigen::JacobiSVD<Matrix> dec(M);
  const Vector& sv = dec.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0)
    throw Error(ErrorKind::NoPositiveSingularValue, "matrix is zero");
  double thr = rank_threshold(sv, M.rows(), M.cols(), tol);
  double nu = sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) nu = sv(i);
  return nu;
}

inline double spectral_norm(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> dec(M);
  return dec.singularValues().size() ? dec.singularValues()(0) : 0.0;
}

// Orthonormal basis of ker M as columns (cols x nullity).
inline Matrix nullspace_basis(const Matrix& M, double tol = kDefaultRankTol) {
  require(tol > 0, "nullspace tolerance must be positive");
  validate_matrix(M);
  const Eigen::Index n = M.cols();
  Eigen::JacobiSVD<Matrix> dec(M, Eigen::ComputeFullV);
  const Vector& sv = dec.singularValues();
  int r = 0;
  if (sv.size() && sv(0) > 0.0) {
    double thr = rank_threshold(sv, M.rows(), M.cols(), tol);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > thr) ++r;
  }
  return dec.matrixV().rightCols(n - r);
}

// h = a + b with a in ker M and b orthogonal to ker M.
inline std::pair<Vector, Vector> decompose_along_kernel(const Matrix& M, const Vector& h,
                                                        double tol = kDefaultRankTol) {
  require(h.size() == M.cols(), "decompose_along_kernel: length of h must equal M.cols");
  Matrix N = nullspace_basis(M, tol);
  Vector a = N * (N.transpose() * h);
  Vector b = h - a;
  return {a, b};
}

// Minimum-norm least-squares solution via the truncated pseudo-inverse.
inline Vector least_squares(const Matrix& M, const Vector& y, double tol = kDefaultRankTol) {
  require(y.size() == M.rows(), "least_squares: length of y must equal M.rows");
  validate_matrix(M);
  Eigen::JacobiSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = dec.singularValues();
  Vector x = Vector::Zero(M.cols());
  if (sv.size() == 0 || sv(0) == 0.0) return x;
  double thr = rank_threshold(sv, M.rows(), M.cols(), tol);
  Vector uty = dec.matrixU().transpose() * y;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) x += dec.matrixV().col(i) * (uty(i) / sv(i));
  return x;
}

inline Matrix select_columns(const Matrix& M, const std::vector<int>& idx) {
  Matrix out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = M.col(idx[j]);
  return out;
}

}  // namespace dictcs
