#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dictcs/combinatorics.hpp"
#include "dictcs/error.hpp"
#include "dictcs/frames.hpp"
#include "dictcs/matcore.hpp"
#include "dictcs/nspcert.hpp"
#include "dictcs/rng.hpp"

namespace dictcs {

// l1 mass outside the s largest-magnitude entries.
inline double best_s_term_residual(const Vector& x, int s) {
  require(s >= 0 && s <= x.size(), "best_s_term_residual: s must lie in [0, len(x)]");
  std::vector<double> a(x.data(), x.data() + x.size());
  for (double& v : a) v = std::abs(v);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double r = 0;
  for (std::size_t i = s; i < a.size(); ++i) r += a[i];
  return r;
}

inline double operator_norm_1_2(const Matrix& M) {
  validate_matrix(M);
  return M.cols() == 0 ? 0.0 : M.colwise().norm().maxCoeff();
}

enum class SnspMode { ExactTiny, SampledUpperEstimate };

inline const char* to_string(SnspMode m) { return m == SnspMode::ExactTiny ? "ExactTiny" : "SampledUpperEstimate"; }

struct SnspEstimate {
  double c_hat = std::numeric_limits<double>::infinity();  // +inf: no v in ker(AD) with Dv != 0
  SnspMode mode = SnspMode::ExactTiny;
  int nullity = 0;
  std::vector<int> worst_support;
  Vector worst_v;
  bool vacuous() const { return std::isinf(c_hat); }
  bool holds() const { return c_hat > 0; }
};

struct SnspOptions {
  int exact_nullity_limit = 2;
  int exact_n_limit = 12;
  double budget = kDefaultCombinatorialBudget;
};

namespace detail {

struct SnspProbe {
  const Matrix& D;
  const Matrix& ND;  // kernel basis of D
  int n;
  SnspEstimate* best;

  double numerator(const Vector& v, const std::vector<int>& T, const std::vector<int>& Tc, Vector* eta = nullptr) const {
    KernelL1Min k = kernel_l1_min_basis(ND, v, T);
    if (eta) *eta = k.eta;
    return l1_on(v, Tc) - k.value;
  }

  void offer(double ratio, const Vector& v, const std::vector<int>& T) const {
    if (ratio < best->c_hat) {
      best->c_hat = ratio;
      best->worst_support = T;
      best->worst_v = v / v.norm();
    }
  }

  // Dv below this counts as Dv = 0 and the direction is skipped.
  bool negligible(const Matrix& Dv, const Vector& v) const { return Dv.norm() <= 1e-12 * (1 + D.norm()) * v.norm(); }
};

// Breakpoints in [0, 1] of the convex piecewise-linear t -> K(w0 + t w1) by tangent sandwiching.
inline std::vector<double> convex_pieces(const SnspProbe& P, const Vector& w0, const Vector& w1, const std::vector<int>& T) {
  struct Node {
    double t, K;
    Vector eta;
  };
  auto eval = [&](double t) {
    Node nd;
    nd.t = t;
    KernelL1Min k = kernel_l1_min_basis(P.ND, w0 + t * w1, T);
    nd.K = k.value;
    nd.eta = k.eta;
    return nd;
  };
  auto tangent = [&](const Node& a, double t) {
    return a.eta.dot(restrict_to(w0, T)) + t * a.eta.dot(restrict_to(w1, T));
  };
  std::vector<double> cuts = {0.0, 1.0};
  struct Seg {
    Node a, b;
    int depth;
  };
  std::vector<Seg> stack = {{eval(0.0), eval(1.0), 0}};
  while (!stack.empty()) {
    Seg g = std::move(stack.back());
    stack.pop_back();
    const double tol = 1e-10 * (1 + std::abs(g.a.K) + std::abs(g.b.K));
    if (std::abs(tangent(g.a, g.b.t) - g.b.K) <= tol || std::abs(tangent(g.b, g.a.t) - g.a.K) <= tol) continue;
    if (g.depth > 40 || g.b.t - g.a.t < 1e-13) continue;
    // where the two tangent lines cross
    double sa = g.a.eta.dot(restrict_to(w1, T)), sb = g.b.eta.dot(restrict_to(w1, T));
    double ia = g.a.eta.dot(restrict_to(w0, T)), ib = g.b.eta.dot(restrict_to(w0, T));
    double tm = std::abs(sa - sb) > 1e-15 ? (ib - ia) / (sa - sb) : 0.5 * (g.a.t + g.b.t);
    if (!(tm > g.a.t && tm < g.b.t)) tm = 0.5 * (g.a.t + g.b.t);
    Node m = eval(tm);
    cuts.push_back(tm);
    if (std::abs(tangent(g.a, tm) - m.K) <= tol && std::abs(tangent(g.b, tm) - m.K) <= tol) continue;
    stack.push_back({g.a, m, g.depth + 1});
    stack.push_back({m, g.b, g.depth + 1});
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

// Exact minimum of the margin ratio along the segment v0 + t (v1 - v0), t in [0, 1].
inline void minimise_on_segment(const SnspProbe& P, const Vector& v0, const Vector& v1, const std::vector<int>& T,
                                const std::vector<int>& Tc) {
  Vector w1 = v1 - v0;
  std::vector<double> cuts = convex_pieces(P, v0, w1, T);
  std::vector<double> num(cuts.size());
  for (std::size_t j = 0; j < cuts.size(); ++j) num[j] = P.numerator(v0 + cuts[j] * w1, T, Tc);
  auto try_point = [&](const Vector& v, double nm) {
    Vector Dv = P.D * v;
    if (!P.negligible(Dv, v)) P.offer(nm / Dv.norm(), v, T);
  };
  for (std::size_t j = 0; j < cuts.size(); ++j) try_point(v0 + cuts[j] * w1, num[j]);
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    // numerator alpha + beta tau is linear on the piece; (alpha + beta tau)/|p + tau q| has one critical point
    Vector a = v0 + cuts[j] * w1, b = v0 + cuts[j + 1] * w1;
    double alpha = num[j], beta = num[j + 1] - num[j];
    Vector p = P.D * a, q = P.D * (b - a);
    double pq = p.dot(q), pp = p.squaredNorm(), qq = q.squaredNorm();
    double den = beta * pq - alpha * qq;
    if (std::abs(den) < 1e-300) continue;
    double tau = (alpha * pq - beta * pp) / den;
    if (!(tau > 0 && tau < 1)) continue;
    Vector v = a + tau * (b - a);
    try_point(v, P.numerator(v, T, Tc));
  }
}

inline Vector unit_dir(double th) {
  Vector r(2);
  r << std::cos(th), std::sin(th);
  return r;
}

}  // namespace detail

// Largest c with |v_{T^c}|_1 - min_{u in ker D} |v_T + u|_1 >= c |Dv|_2 over v in ker(AD), |T| <= s.
// Exact when the kernel of AD has dimension <= 2 and n is small; otherwise a sampled over-estimate.
inline SnspEstimate snsp_constant_estimate(const Matrix& A, const Frame& D, int s, int samples, std::uint64_t seed,
                                           const SnspOptions& opt = {}) {
  check_pair(A, D);
  const int n = D.n();
  require(s >= 1 && s <= n, "order s must lie in [1, n]");
  const Matrix& Dm = D.matrix();
  Matrix N = nullspace_basis(A * Dm);
  Matrix ND = nullspace_basis(Dm, D.tol());
  SnspEstimate est;
  est.nullity = static_cast<int>(N.cols());
  const int k = est.nullity;
  detail::SnspProbe P{Dm, ND, n, &est};
  // kernel directions that D does not annihilate (N has orthonormal columns)
  if (k == 0 || P.negligible(Dm * N, Vector::Ones(1))) return est;

  std::vector<std::vector<int>> supports;
  for_each_subset(n, s, [&](const std::vector<int>& T) { supports.push_back(T); });

  // the enumeration below covers kernels of dimension one and two only
  if (k <= std::min(opt.exact_nullity_limit, 2) && n <= opt.exact_n_limit) {
    est.mode = SnspMode::ExactTiny;
    // numerator and |Dv| are even, so half the kernel sphere suffices
    if (k == 1) {
      Vector v = N.col(0);
      if (P.negligible(Dm * v, v)) return est;
      for (const auto& T : supports) {
        std::vector<int> Tc = complement(T, n);
        P.offer(P.numerator(v, T, Tc) / (Dm * v).norm(), v, T);
      }
      return est;
    }
    // k == 2: cut the half circle where some coordinate of v or Dv vanishes
    const double pi = std::numbers::pi;
    std::vector<double> th = {0.0, pi / 2};
    auto add_zero = [&](double a, double b) {  // a cos + b sin = 0
      if (std::abs(a) + std::abs(b) == 0) return;
      double t = std::atan2(a, -b);
      if (t < 0) t += pi;
      if (t >= pi) t -= pi;
      th.push_back(t);
    };
    for (int i = 0; i < n; ++i) add_zero(N(i, 0), N(i, 1));
    Matrix DN = Dm * N;
    if (rank(DN) < 2) {
      Matrix z = nullspace_basis(DN);
      add_zero(z(1, 0), -z(0, 0));
    }
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }), th.end());
    th.push_back(pi);
    detail::check_budget(static_cast<double>(supports.size()) * th.size(), opt.budget, "exact SNSP constant");
    for (const auto& T : supports) {
      std::vector<int> Tc = complement(T, n);
      for (std::size_t j = 0; j + 1 < th.size(); ++j)
        detail::minimise_on_segment(P, N * detail::unit_dir(th[j]), N * detail::unit_dir(th[j + 1]), T, Tc);
    }
    return est;
  }

  est.mode = SnspMode::SampledUpperEstimate;
  require(samples >= 1, "sampled SNSP estimate needs at least one sample");
  detail::check_budget(static_cast<double>(supports.size()) * samples, opt.budget, "sampled SNSP constant");
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    Vector v = N * gaussian_vector(rng, k);
    Vector Dv = Dm * v;
    if (P.negligible(Dv, v)) continue;
    for (const auto& T : supports) P.offer(P.numerator(v, T, complement(T, n)) / Dv.norm(), v, T);
  }
  return est;
}

struct StabilityInputs {
  double c = 1;
  double nu_A = 1;
  double nu_D = 1;
  int n = 1;
  double eps = 0;
  double delta = 0;
  double A_spectral = 0;
  double x0_l1 = 0;
  double sigma_s_x0 = 0;
};

inline void validate(const StabilityInputs& in) {
  auto fin = [](double x) { return std::isfinite(x); };
  require(fin(in.c) && in.c > 0, "stability: c must be finite and positive");
  require(fin(in.nu_A) && in.nu_A > 0, "stability: nu_A must be finite and positive");
  require(fin(in.nu_D) && in.nu_D > 0, "stability: nu_D must be finite and positive");
  require(in.n >= 1, "stability: n must be positive");
  require(fin(in.eps) && in.eps >= 0, "stability: eps must be finite and nonnegative");
  require(fin(in.delta) && in.delta >= 0, "stability: delta must be finite and nonnegative");
  require(fin(in.A_spectral) && in.A_spectral >= 0, "stability: A_spectral must be finite and nonnegative");
  require(fin(in.x0_l1) && in.x0_l1 >= 0, "stability: x0_l1 must be finite and nonnegative");
  require(fin(in.sigma_s_x0) && in.sigma_s_x0 >= 0, "stability: sigma_s_x0 must be finite and nonnegative");
}

// Signal error bound under the strong frame null space property.
inline double bound_theorem_sta(const StabilityInputs& in) {
  validate(in);
  const double rn = std::sqrt(static_cast<double>(in.n));
  return 2 / in.c * in.sigma_s_x0 + in.eps * (2 * rn / (in.c * in.nu_A * in.nu_D) + 2 / in.nu_A);
}

// Coefficient error bound, noise term eps / nu_AD as the derivation gives it.
inline double bound_lemma_coeff(const StabilityInputs& in, double nu_AD) {
  validate(in);
  require(std::isfinite(nu_AD) && nu_AD > 0, "stability: nu_AD must be finite and positive");
  return 2 / in.c * in.sigma_s_x0 + in.eps / nu_AD;
}

// Same bound with the noise term printed as 2 nu_AD eps.
inline double bound_lemma_coeff_stated(const StabilityInputs& in, double nu_AD) {
  validate(in);
  require(std::isfinite(nu_AD) && nu_AD > 0, "stability: nu_AD must be finite and positive");
  return 2 / in.c * in.sigma_s_x0 + 2 * nu_AD * in.eps;
}

struct RobustBound {
  double rho;
  double bound;
};

// Error bound when the signal lives on a perturbed frame and the solve uses the enlarged radius rho.
inline RobustBound bound_theorem_robust(const StabilityInputs& in) {
  validate(in);
  const double rn = std::sqrt(static_cast<double>(in.n));
  RobustBound r;
  r.rho = 2 * in.delta * in.A_spectral * in.x0_l1 + in.eps;
  r.bound = 2 * in.delta * in.x0_l1 + 2 * rn / (in.c * in.nu_A * in.nu_D) * r.rho + 2 * r.rho / in.nu_A;
  return r;
}

}  // namespace dictcs
