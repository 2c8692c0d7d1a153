#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace dictcs {

// C(n, k) as a double so callers can compare against budgets without overflow.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

inline constexpr double kDefaultCombinatorialBudget = 1e7;

// Lexicographic k-subset iteration over [0, n).
class Combinations {
 public:
  Combinations(int n, int k) : n_(n), k_(k), idx_(k), done_(k > n || k < 0) {
    std::iota(idx_.begin(), idx_.end(), 0);
  }
  bool done() const { return done_; }
  const std::vector<int>& current() const { return idx_; }
  void next() {
    int i = k_ - 1;
    while (i >= 0 && idx_[i] == n_ - k_ + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++idx_[i];
    for (int j = i + 1; j < k_; ++j) idx_[j] = idx_[j - 1] + 1;
  }

 private:
  int n_, k_;
  std::vector<int> idx_;
  bool done_;
};

template <typename F>
void for_each_subset(int n, int k, F&& f) {
  for (Combinations c(n, k); !c.done(); c.next()) f(c.current());
}

inline std::vector<int> complement(const std::vector<int>& T, int n) {
  std::vector<char> in(n, 0);
  for (int t : T) in[t] = 1;
  std::vector<int> out;
  out.reserve(n - T.size());
  for (int i = 0; i < n; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

}  // namespace dictcs
