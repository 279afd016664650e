#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "scorefusion/barycenter.hpp"
#include "scorefusion/core.hpp"
#include "scorefusion/rng.hpp"

namespace testutil {

using scorefusion::GaussianMixture;
using scorefusion::MixtureComponent;
using scorefusion::RngStream;
using scorefusion::VectorXd;

inline GaussianMixture mixture1d(std::vector<double> weights, std::vector<double> means, std::vector<double> vars) {
  std::vector<MixtureComponent> comps;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    MixtureComponent c;
    c.weight = weights[i];
    c.mean = VectorXd::Constant(1, means[i]);
    c.var = VectorXd::Constant(1, vars[i]);
    comps.push_back(c);
  }
  return GaussianMixture(1, std::move(comps));
}

/// Random mixture with normalized uniform weights, means in [-3, 3], variances
/// in [0.3, 2.0].
inline GaussianMixture random_mixture(int dim, int k, RngStream& rng) {
  std::vector<MixtureComponent> comps;
  double wsum = 0.0;
  for (int j = 0; j < k; ++j) {
    MixtureComponent c;
    c.weight = 0.1 + rng.uniform();
    wsum += c.weight;
    c.mean.resize(dim);
    c.var.resize(dim);
    for (int i = 0; i < dim; ++i) {
      c.mean[i] = -3.0 + 6.0 * rng.uniform();
      c.var[i] = 0.3 + 1.7 * rng.uniform();
    }
    comps.push_back(c);
  }
  double acc = 0.0;
  for (int j = 0; j < k; ++j) {
    comps[static_cast<std::size_t>(j)].weight /= wsum;
    acc += comps[static_cast<std::size_t>(j)].weight;
  }
  comps.back().weight += 1.0 - acc;  // exact simplex sum
  return GaussianMixture(dim, std::move(comps));
}

/// Central finite difference of a scalar field.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h = 1e-5) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
}

// Canonical desk-scale family: two bimodal auxiliaries and a planted
// barycenter target at lambda_true = (0.6, 0.4).
inline GaussianMixture canonical_aux1() { return mixture1d({0.5, 0.5}, {-4.0, 4.0}, {1.0, 1.0}); }
inline GaussianMixture canonical_aux2() { return mixture1d({0.5, 0.5}, {-2.0, 2.0}, {0.5, 0.5}); }

inline scorefusion::GridDensity canonical_target_density(const scorefusion::SimplexWeights& lambda_true) {
  const std::vector<GaussianMixture> aux{canonical_aux1(), canonical_aux2()};
  std::vector<scorefusion::LogDensityFn> fns;
  for (const auto& m : aux) fns.push_back(scorefusion::log_density_fn(m));
  const scorefusion::Grid g = scorefusion::Grid::cover(aux, 4096);
  return scorefusion::barycenter_density_grid(fns, lambda_true, g);
}

}  // namespace testutil
