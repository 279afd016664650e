#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "scorefusion/core.hpp"

namespace scorefusion {

/// Exact empirical 1-Wasserstein distance between two 1-D sample sets, via the
/// quantile coupling: the integral of |F_a^{-1}(u) - F_b^{-1}(u)| over (0, 1).
/// Equal sizes reduce to the mean absolute difference of the order statistics;
/// unequal sizes walk the merged quantile breakpoints exactly.
inline double wasserstein1_1d(const SampleSet& a, const SampleSet& b) {
  if (a.dim != 1 || b.dim != 1) throw DimensionError("wasserstein1_1d: both sample sets must be 1-D");
  if (a.size() == 0 || b.size() == 0) throw InvariantError("wasserstein1_1d: empty sample set");
  std::vector<double> xs(a.data.col(0).data(), a.data.col(0).data() + a.size());
  std::vector<double> ys(b.data.col(0).data(), b.data.col(0).data() + b.size());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  const std::size_t n = xs.size(), m = ys.size();
  if (n == m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(xs[i] - ys[i]);
    return acc / static_cast<double>(n);
  }

  // Breakpoints of the piecewise-constant quantile functions are i/n and j/m;
  // compare them in exact integer arithmetic to keep the coupling exact.
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  double u_prev = 0.0;
  while (i < n && j < m) {
    const unsigned long long lhs = static_cast<unsigned long long>(i + 1) * m;
    const unsigned long long rhs = static_cast<unsigned long long>(j + 1) * n;
    const double u_next = lhs <= rhs ? static_cast<double>(i + 1) / static_cast<double>(n)
                                     : static_cast<double>(j + 1) / static_cast<double>(m);
    acc += std::abs(xs[i] - ys[j]) * (u_next - u_prev);
    u_prev = u_next;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return acc;
}

/// KL divergence between two densities tabulated on the same grid, by
/// trapezoidal quadrature of p log(p/q) with 0 log 0 = 0. Support violations
/// (p above the 1e-300 underflow threshold where q is at or below it) return
/// +infinity rather than throwing.
inline double kl_grid(const VectorXd& p, const VectorXd& q, const Grid& g) {
  if (p.size() != q.size() || p.size() != g.num_points()) throw DimensionError("kl_grid: size mismatch");
  constexpr double kSupportThreshold = 1e-300;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;  // 0 log 0 = 0
    if (p[i] > kSupportThreshold && q[i] <= kSupportThreshold)
      return std::numeric_limits<double>::infinity();
    acc += g.quad_weight(i) * p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return acc;
}

/// Total variation distance between grid densities: 0.5 * integral |p - q|.
inline double tv_grid(const VectorXd& p, const VectorXd& q, const Grid& g) {
  if (p.size() != q.size() || p.size() != g.num_points()) throw DimensionError("tv_grid: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) acc += g.quad_weight(i) * std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

/// Fixed-width histogram over [lo, hi]; the closing edge belongs to the last
/// bin. Out-of-range samples are dropped, so the counts sum to the in-range
/// sample count.
struct Histogram {
  VectorXd edges;         // bins + 1
  Eigen::VectorXi counts;  // bins
};

inline Histogram histogram(const SampleSet& a, int bins, double lo, double hi) {
  if (a.dim != 1) throw DimensionError("histogram: 1-D only");
  if (bins < 1) throw InvariantError("histogram: bins must be >= 1");
  if (!(lo < hi)) throw InvariantError("histogram: lo must be < hi");
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + i * width;
  h.counts = Eigen::VectorXi::Zero(bins);
  for (Eigen::Index s = 0; s < a.size(); ++s) {
    const double x = a.data(s, 0);
    if (x < lo || x > hi) continue;
    int bin = static_cast<int>((x - lo) / width);
    if (bin >= bins) bin = bins - 1;
    ++h.counts[bin];
  }
  return h;
}

}  // namespace scorefusion
