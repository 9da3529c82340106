#pragma once

// Independent reference computations and hand-rolled generators for tests.
// Nothing here calls into the library's numerics.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "core/matrix.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows identity(std::size_t m) {
  Rows r(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) r[i][i] = 1.0;
  return r;
}

inline Rows multiply(const Rows& a, const Rows& b) {
  const std::size_t m = a.size();
  Rows c(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < m; ++l) s += a[i][l] * b[l][j];
      c[i][j] = s;
    }
  return c;
}

inline Rows power(const Rows& a, std::size_t k) {
  Rows p = identity(a.size());
  for (std::size_t s = 0; s < k; ++s) p = multiply(a, p);
  return p;
}

inline double max_abs_diff(const Rows& a, const Rows& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

// Transitive closure of the positive-entry graph (Warshall).
inline std::vector<std::vector<bool>> reach(const Rows& a) {
  const std::size_t m = a.size();
  std::vector<std::vector<bool>> r(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i) {
    r[i][i] = true;
    for (std::size_t j = 0; j < m; ++j)
      if (a[i][j] > 0.0) r[i][j] = true;
  }
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t i = 0; i < m; ++i)
      if (r[i][l])
        for (std::size_t j = 0; j < m; ++j)
          if (r[l][j]) r[i][j] = true;
  return r;
}

inline bool irreducible(const Rows& a) {
  for (const auto& row : reach(a))
    for (bool b : row)
      if (!b) return false;
  return true;
}

// Solves pi^T A = pi^T, sum pi = 1 by Gaussian elimination with partial pivoting.
inline std::vector<double> stationary(const Rows& a) {
  const std::size_t m = a.size();
  Rows sys(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t r = 0; r + 1 < m; ++r)
    for (std::size_t c = 0; c < m; ++c) sys[r][c] = a[c][r] - (r == c ? 1.0 : 0.0);
  for (std::size_t c = 0; c < m; ++c) sys[m - 1][c] = 1.0;
  sys[m - 1][m] = 1.0;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(sys[r][col]) > std::abs(sys[piv][col])) piv = r;
    std::swap(sys[col], sys[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = sys[r][col] / sys[col][col];
      for (std::size_t c = col; c <= m; ++c) sys[r][c] -= f * sys[col][c];
    }
  }
  std::vector<double> pi(m);
  for (std::size_t i = 0; i < m; ++i) pi[i] = sys[i][m] / sys[i][i];
  return pi;
}

// Balancedness of one matrix by recursive subset enumeration.
inline double alpha_brute(const Rows& a, bool* vacuous = nullptr) {
  const std::size_t m = a.size();
  double best = 1.0;
  bool any = false;
  std::vector<bool> in(m, false);
  auto visit = [&](auto&& self, std::size_t i, std::size_t count) -> void {
    if (i == m) {
      if (count == 0 || count == m) return;
      double out = 0.0, inflow = 0.0;
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) {
          if (in[r] && !in[c]) out += a[r][c];
          if (!in[r] && in[c]) inflow += a[r][c];
        }
      if (inflow > 0.0) {
        const double ratio = out / inflow;
        if (!any || ratio < best) best = ratio;
        any = true;
      }
      return;
    }
    in[i] = false;
    self(self, i + 1, count);
    in[i] = true;
    self(self, i + 1, count + 1);
    in[i] = false;
  };
  visit(visit, 0, 0);
  if (vacuous) *vacuous = !any;
  return any ? best : 1.0;
}

inline Rows rows_of(const stochchain::Matrix& m) { return m.to_rows(); }

// Small deterministic generator for property tests (xorshift64*).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL) {
    if (s_ == 0) s_ = 1;
  }
  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545F4914F6CDD1DULL;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  bool chance(double p) { return uniform() < p; }

  // Row-stochastic matrix where each off-diagonal entry is zero with
  // probability `zero`; the diagonal is positive when `keep_diagonal`.
  Rows stochastic(std::size_t m, double zero, bool keep_diagonal) {
    Rows r(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const bool diag = i == j;
        if ((diag && keep_diagonal) || !chance(zero)) r[i][j] = uniform(0.05, 1.0);
        s += r[i][j];
      }
      if (s == 0.0) {
        r[i][i] = 1.0;
        s = 1.0;
      }
      for (double& v : r[i]) v /= s;
    }
    return r;
  }

  std::vector<double> vector(std::size_t m, double lo, double hi) {
    std::vector<double> v(m);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

  std::vector<double> simplex(std::size_t m) {
    std::vector<double> v = vector(m, 0.01, 1.0);
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
  }

 private:
  std::uint64_t s_;
};

}  // namespace oracle
