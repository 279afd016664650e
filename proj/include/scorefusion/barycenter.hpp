#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "scorefusion/core.hpp"

namespace scorefusion {

// Distribution-level KL barycenter. For reference densities p_1..p_k and
// weights lambda on the simplex, the barycenter density is the normalized
// geometric mixture
//   p_lambda(x) = prod_i p_i(x)^{lambda_i} / Z,
//   Z = integral of prod_i p_i(x)^{lambda_i} dx.

using LogDensityFn = std::function<double(const VectorXd&)>;

inline LogDensityFn log_density_fn(const GaussianMixture& m) {
  return [m](const VectorXd& x) { return mixture_log_density(m, x); };
}

/// Closed form for single Gaussians: per-coordinate precisions average with
/// weights lambda, 1/v* = sum_i lambda_i / v_i, and mu* = v* sum_i lambda_i mu_i / v_i.
inline GaussianMixture gaussian_barycenter(const std::vector<GaussianMixture>& components, const SimplexWeights& w) {
  if (components.empty()) throw InvariantError("gaussian_barycenter: needs at least one Gaussian");
  if (w.k() != static_cast<int>(components.size()))
    throw DimensionError("gaussian_barycenter: weights length must match input count");
  const int d = components.front().dim();
  VectorXd precision = VectorXd::Zero(d);
  VectorXd scaled_mean = VectorXd::Zero(d);
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& m = components[i];
    if (m.num_components() != 1) throw InvariantError("gaussian_barycenter: inputs must be single Gaussians");
    if (m.dim() != d) throw DimensionError("gaussian_barycenter: inputs must share dim");
    const auto& c = m.components().front();
    const double li = w[static_cast<Eigen::Index>(i)];
    precision += (li / c.var.array()).matrix();
    scaled_mean += (li * c.mean.array() / c.var.array()).matrix();
  }
  VectorXd var = precision.cwiseInverse();
  VectorXd mean = var.cwiseProduct(scaled_mean);
  return GaussianMixture::gaussian(std::move(mean), std::move(var));
}

/// Barycenter density tabulated on a grid, plus the log-partition.
struct GridDensity {
  Grid grid;
  VectorXd values;
  double log_Z = 0.0;
};

namespace detail {

/// Reference log-densities tabulated on the grid (rows = references), with the
/// coverage check: each reference must hold all but 1e-4 of its mass inside
/// the grid box. Cached by the vanilla-fusion loop to avoid re-evaluation.
struct GridRefTable {
  Grid grid;
  MatrixXd log_p;        // k x G
  VectorXd log_quad_w;   // G quadrature log-weights

  GridRefTable(const std::vector<LogDensityFn>& refs, const Grid& g) : grid(g) {
    if (refs.empty()) throw InvariantError("barycenter: needs at least one reference");
    const Eigen::Index G = g.num_points();
    log_p.resize(static_cast<Eigen::Index>(refs.size()), G);
    log_quad_w.resize(G);
    for (Eigen::Index gi = 0; gi < G; ++gi) {
      const VectorXd x = g.point(gi);
      log_quad_w[gi] = std::log(g.quad_weight(gi));
      for (std::size_t i = 0; i < refs.size(); ++i) log_p(static_cast<Eigen::Index>(i), gi) = refs[i](x);
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const double mass = log_sum_exp(log_quad_w + log_p.row(static_cast<Eigen::Index>(i)).transpose());
      if (!(std::exp(mass) >= 1.0 - 1e-4))
        throw InsufficientGridError("barycenter: reference " + std::to_string(i) +
                                    " has mass outside the grid (covered " + std::to_string(std::exp(mass)) + ")");
    }
  }

  int k() const { return static_cast<int>(log_p.rows()); }

  /// Unnormalized log-barycenter values sum_i lambda_i log p_i on the grid.
  VectorXd log_geometric(const SimplexWeights& w) const {
    if (w.k() != k()) throw DimensionError("barycenter: weights length must match reference count");
    return log_p.transpose() * w.lambda();
  }

  double log_partition(const SimplexWeights& w) const { return log_sum_exp(log_quad_w + log_geometric(w)); }

  GridDensity density(const SimplexWeights& w) const {
    const VectorXd lg = log_geometric(w);
    const double log_Z = log_sum_exp(log_quad_w + lg);
    GridDensity out{grid, (lg.array() - log_Z).exp().matrix(), log_Z};
    return out;
  }
};

}  // namespace detail

/// Barycenter density over the grid; values integrate to 1 up to quadrature
/// tolerance. Throws InsufficientGridError when a reference leaks more than
/// 1e-4 of its mass outside the grid.
inline GridDensity barycenter_density_grid(const std::vector<LogDensityFn>& log_densities, const SimplexWeights& w,
                                           const Grid& g) {
  return detail::GridRefTable(log_densities, g).density(w);
}

/// log integral of prod_i p_i^{lambda_i}, by log-sum-exp trapezoidal quadrature.
inline double barycenter_log_partition(const std::vector<LogDensityFn>& log_densities, const SimplexWeights& w,
                                       const Grid& g) {
  return detail::GridRefTable(log_densities, g).log_partition(w);
}

/// Inverse-CDF draws from a tabulated 1-D density (piecewise-linear CDF).
inline SampleSet sample_grid_density(const GridDensity& d, Eigen::Index n, RngStream& rng) {
  if (d.grid.dim() != 1) throw DimensionError("sample_grid_density: 1-D only");
  if (n < 1) throw InvariantError("sample_grid_density: n must be >= 1");
  const Eigen::Index G = d.grid.num_points();
  const double step = d.grid.step(0);
  VectorXd cdf(G);
  cdf[0] = 0.0;
  for (Eigen::Index i = 1; i < G; ++i) cdf[i] = cdf[i - 1] + 0.5 * step * (d.values[i - 1] + d.values[i]);
  const double total = cdf[G - 1];
  if (!(total > 0.0)) throw InvariantError("sample_grid_density: density has zero mass");
  cdf /= total;

  const double lo = d.grid.axes().front().lo;
  MatrixXd out(n, 1);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double u = rng.uniform();
    // first segment with cdf[hi] > u
    Eigen::Index a = 0, b = G - 1;
    while (b - a > 1) {
      const Eigen::Index mid = (a + b) / 2;
      if (cdf[mid] > u)
        b = mid;
      else
        a = mid;
    }
    const double seg = cdf[b] - cdf[a];
    const double frac = seg > 0.0 ? (u - cdf[a]) / seg : 0.5;
    out(s, 0) = lo + (static_cast<double>(a) + frac) * step;
  }
  return SampleSet(1, std::move(out), "sample_grid_density", rng.id());
}

}  // namespace scorefusion
