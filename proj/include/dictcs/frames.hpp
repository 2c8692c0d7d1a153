#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dictcs/combinatorics.hpp"
#include "dictcs/error.hpp"
#include "dictcs/matcore.hpp"
#include "dictcs/rng.hpp"

namespace dictcs {

// d x n matrix (n >= d) whose columns span R^d.
class Frame {
 public:
  explicit Frame(Matrix m, double tol = kDefaultRankTol) : m_(std::move(m)), tol_(tol) {
    validate_matrix(m_, "frame");
    require(tol_ > 0, "frame tolerance must be positive");
    if (m_.cols() < m_.rows())
      throw Error(ErrorKind::InvalidInput, "frame must have at least as many columns as rows, got " + shape_str(m_));
    if (rank(m_, tol_) != m_.rows())
      throw Error(ErrorKind::InvalidInput, "frame columns do not span R^" + std::to_string(m_.rows()));
  }
  const Matrix& matrix() const { return m_; }
  double tol() const { return tol_; }
  int d() const { return static_cast<int>(m_.rows()); }
  int n() const { return static_cast<int>(m_.cols()); }

 private:
  Matrix m_;
  double tol_;
};

// Smallest number of dependent columns; `finite == false` means no dependent set up to the cap.
struct Spark {
  bool finite = false;
  int value = 0;
  std::string str() const { return finite ? std::to_string(value) : "inf"; }
  bool operator==(const Spark&) const = default;
};

struct FrameStats {
  double coherence = 0;
  double lower_bound_A = 0;
  double upper_bound_B = 0;
  std::optional<Spark> spark;      // absent when the enumeration exceeds the budget
  std::optional<bool> full_spark;  // likewise
  double nu_D = 0;
};

inline Matrix normalized_columns(const Matrix& D) {
  Matrix N = D;
  for (Eigen::Index j = 0; j < D.cols(); ++j) {
    double nrm = D.col(j).norm();
    if (nrm == 0.0) throw Error(ErrorKind::DegenerateColumn, "column " + std::to_string(j + 1) + " is zero");
    N.col(j) /= nrm;
  }
  return N;
}

inline double coherence(const Matrix& D) {
  Matrix N = normalized_columns(D);
  Matrix G = (N.transpose() * N).cwiseAbs();
  G.diagonal().setZero();
  return D.cols() < 2 ? 0.0 : std::min(1.0, G.maxCoeff());
}
inline double coherence(const Frame& D) { return coherence(D.matrix()); }

inline std::pair<double, double> frame_bounds(const Frame& D) {
  Eigen::JacobiSVD<Matrix> dec(D.matrix());
  const Vector& sv = dec.singularValues();
  return {sv(sv.size() - 1) * sv(sv.size() - 1), sv(0) * sv(0)};
}

inline Spark spark(const Matrix& D, int cap, double tol = kDefaultRankTol,
                   double budget = kDefaultCombinatorialBudget) {
  validate_matrix(D);
  const int n = static_cast<int>(D.cols());
  const int r = rank(D, tol);
  if (r == n) return {};
  // Any r+1 columns are dependent, so the search never needs to go beyond that.
  const int top = std::min(cap, r + 1);
  for (int k = 1; k <= top; ++k) {
    if (k == r + 1) return {true, k};
    if (binomial(n, k) > budget)
      throw Error(ErrorKind::CombinatorialBudgetExceeded,
                  "spark enumeration at size " + std::to_string(k) + " exceeds budget");
    for (Combinations c(n, k); !c.done(); c.next())
      if (rank(select_columns(D, c.current()), tol) < k) return {true, k};
  }
  return {};
}
inline Spark spark(const Frame& D, int cap, double budget = kDefaultCombinatorialBudget) {
  require(cap <= D.d() + 1, "spark cap must not exceed d+1");
  return spark(D.matrix(), cap, D.tol(), budget);
}

inline bool is_full_spark(const Frame& D, double budget = kDefaultCombinatorialBudget, std::uint64_t screen_seed = 1) {
  const int d = D.d(), n = D.n();
  if (binomial(n, d) > budget)
    throw Error(ErrorKind::CombinatorialBudgetExceeded,
                "C(" + std::to_string(n) + "," + std::to_string(d) + ") exceeds the full-spark budget");
  // Cheap rejection on a few random minors before the exhaustive sweep.
  Rng rng(screen_seed);
  for (int i = 0; i < 16 && n > d; ++i)
    if (rank(select_columns(D.matrix(), random_subset(rng, n, d)), D.tol()) < d) return false;
  for (Combinations c(n, d); !c.done(); c.next())
    if (rank(select_columns(D.matrix(), c.current()), D.tol()) < d) return false;
  return true;
}

inline Matrix canonical_dual(const Frame& D) {
  const Matrix& M = D.matrix();
  return (M * M.transpose()).llt().solve(M);
}

inline FrameStats frame_stats(const Frame& D, double budget = kDefaultCombinatorialBudget) {
  FrameStats st;
  st.coherence = coherence(D);
  auto [A, B] = frame_bounds(D);
  st.lower_bound_A = A;
  st.upper_bound_B = B;
  st.nu_D = smallest_positive_singular(D.matrix(), D.tol());
  try {
    st.full_spark = is_full_spark(D, budget);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::CombinatorialBudgetExceeded) throw;
  }
  if (st.full_spark && *st.full_spark) {
    st.spark = D.n() > D.d() ? Spark{true, D.d() + 1} : Spark{};
  } else {
    try {
      st.spark = spark(D, D.d() + 1, budget);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CombinatorialBudgetExceeded) throw;
    }
  }
  return st;
}

// Orthonormal DCT-II; row k is the k-th cosine atom.
inline Matrix build_dct(int d) {
  require(d >= 1, "DCT dimension must be positive");
  Matrix F(d, d);
  const double pi = std::numbers::pi;
  for (int k = 0; k < d; ++k) {
    double ck = std::sqrt((k == 0 ? 1.0 : 2.0) / d);
    for (int j = 0; j < d; ++j) F(k, j) = ck * std::cos(pi * k * (2.0 * j + 1.0) / (2.0 * d));
  }
  return F;
}

// D = [F, G]: F is the DCT, each G column mixes three distinct F columns plus a perturbation.
// The random draws do not depend on the perturbation size, so one seed gives the same
// base frame at every perturbation level.
inline Frame build_coherent_frame(int d, double perturbation, std::uint64_t seed) {
  require(d >= 4, "coherent frame needs d >= 4");
  require(perturbation >= 0 && std::isfinite(perturbation), "perturbation must be finite and nonnegative");
  Matrix F = build_dct(d);
  Matrix D(d, 2 * d);
  D.leftCols(d) = F;
  Rng rng(derive_seed(seed, 0xC0FFEEu));
  for (int j = 0; j < d; ++j) {
    std::vector<int> k = random_subset(rng, d, 3);
    Vector a = gaussian_vector(rng, 3);
    Vector g = gaussian_vector(rng, d);
    Vector col = a(0) * F.col(k[0]) + a(1) * F.col(k[1]) + a(2) * F.col(k[2]) + perturbation * g;
    D.col(d + j) = col / col.norm();
  }
  return Frame(std::move(D));
}

// Records which DCT columns feed each G column of build_coherent_frame (same seed).
inline std::vector<std::vector<int>> coherent_frame_mixing(int d, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xC0FFEEu));
  std::vector<std::vector<int>> out;
  for (int j = 0; j < d; ++j) {
    out.push_back(random_subset(rng, d, 3));
    gaussian_vector(rng, 3);
    gaussian_vector(rng, d);
  }
  return out;
}

// [I_d, w] with w = (1 + eps, eps, ..., eps).
inline Frame build_example_frame(int d, double eps) {
  require(d >= 2, "example frame needs d >= 2");
  require(eps > 0 && std::isfinite(eps), "example frame needs eps > 0");
  Matrix D = Matrix::Zero(d, d + 1);
  D.leftCols(d).setIdentity();
  D.col(d).setConstant(eps);
  D(0, d) += 1.0;
  return Frame(std::move(D));
}

inline Matrix gaussian_matrix(int m, int d, std::uint64_t seed) {
  require(m >= 1 && d >= 1, "gaussian_matrix needs positive dimensions");
  Rng rng(seed);
  return gaussian_block(rng, m, d) / std::sqrt(static_cast<double>(m));
}

}  // namespace dictcs
