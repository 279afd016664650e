#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scorefusion/rng.hpp"

namespace scorefusion {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Rejected input: mismatched dimensions or sizes.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Constructor argument violates a domain invariant.
struct InvariantError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation requested at a time where the transition kernel is singular.
struct SingularTimeError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A simulated trajectory left the representable range.
struct DivergedTrajectoryError : std::runtime_error {
  DivergedTrajectoryError(std::size_t step, std::size_t trajectory)
      : std::runtime_error("trajectory " + std::to_string(trajectory) + " became non-finite at step " +
                           std::to_string(step)),
        step_index(step),
        trajectory_index(trajectory) {}
  std::size_t step_index;
  std::size_t trajectory_index;
};

/// Quadrature grid does not cover the effective support of a reference.
struct InsufficientGridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Target samples fell outside the machine support of a reference density.
struct FlaggedSampleError : std::runtime_error {
  FlaggedSampleError(std::string msg, std::vector<std::size_t> indices)
      : std::runtime_error(std::move(msg)), sample_indices(std::move(indices)) {}
  std::vector<std::size_t> sample_indices;
};

/// Model parameters are non-finite.
struct PoisonedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Persisted document does not match the expected schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// log(sum_i exp(v_i)), stable against underflow.
inline double log_sum_exp(const VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray inf/nan) propagates
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

// ---------------------------------------------------------------------------
// GaussianMixture
// ---------------------------------------------------------------------------

/// One diagonal-covariance Gaussian component.
struct MixtureComponent {
  double weight = 1.0;
  VectorXd mean;
  VectorXd var;
};

/// Weighted diagonal-covariance Gaussian mixture with closed-form density and
/// score. Immutable after construction; weights must sum to 1 within 1e-12 and
/// all variances must be strictly positive.
class GaussianMixture {
 public:
  GaussianMixture(int dim, std::vector<MixtureComponent> components) : dim_(dim), components_(std::move(components)) {
    if (dim_ < 1) throw InvariantError("GaussianMixture: dim must be positive");
    if (components_.empty()) throw InvariantError("GaussianMixture: needs at least one component");
    double wsum = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight >= 0.0)) throw InvariantError("GaussianMixture: component weights must be nonnegative");
      if (c.mean.size() != dim_ || c.var.size() != dim_)
        throw InvariantError("GaussianMixture: component mean/var length must equal dim");
      if ((c.var.array() <= 0.0).any()) throw InvariantError("GaussianMixture: variances must be strictly positive");
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw InvariantError("GaussianMixture: weights must sum to 1 within 1e-12");
  }

  /// Single Gaussian in one dimension.
  static GaussianMixture gaussian1d(double mean, double var) {
    MixtureComponent c;
    c.weight = 1.0;
    c.mean = VectorXd::Constant(1, mean);
    c.var = VectorXd::Constant(1, var);
    return GaussianMixture(1, {c});
  }

  /// Single Gaussian in d dimensions.
  static GaussianMixture gaussian(VectorXd mean, VectorXd var) {
    const int d = static_cast<int>(mean.size());
    MixtureComponent c;
    c.weight = 1.0;
    c.mean = std::move(mean);
    c.var = std::move(var);
    return GaussianMixture(d, {c});
  }

  int dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  std::size_t num_components() const { return components_.size(); }

 private:
  int dim_;
  std::vector<MixtureComponent> components_;
};

namespace detail {

/// Per-component log densities log(w_j) + log N(x; mu_j, diag v_j).
inline VectorXd component_log_terms(const GaussianMixture& m, const VectorXd& x) {
  const auto& comps = m.components();
  VectorXd terms(static_cast<Eigen::Index>(comps.size()));
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto& c = comps[j];
    if (c.weight == 0.0) {
      terms[static_cast<Eigen::Index>(j)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double le = std::log(c.weight);
    for (int i = 0; i < m.dim(); ++i) {
      const double d = x[i] - c.mean[i];
      le -= 0.5 * (kLog2Pi + std::log(c.var[i]) + d * d / c.var[i]);
    }
    terms[static_cast<Eigen::Index>(j)] = le;
  }
  return terms;
}

}  // namespace detail

/// log of the mixture density at x, computed with log-sum-exp.
inline double mixture_log_density(const GaussianMixture& m, const VectorXd& x) {
  if (x.size() != m.dim()) throw DimensionError("mixture_log_density: x has wrong length");
  return log_sum_exp(detail::component_log_terms(m, x));
}

/// Stein score of the mixture at x: the responsibility-weighted sum of the
/// component scores (mu_j - x) / v_j.
inline VectorXd mixture_score(const GaussianMixture& m, const VectorXd& x) {
  if (x.size() != m.dim()) throw DimensionError("mixture_score: x has wrong length");
  const VectorXd terms = detail::component_log_terms(m, x);
  const double lse = log_sum_exp(terms);
  VectorXd score = VectorXd::Zero(m.dim());
  const auto& comps = m.components();
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const double r = std::exp(terms[static_cast<Eigen::Index>(j)] - lse);
    if (r == 0.0) continue;
    score += r * ((comps[j].mean - x).array() / comps[j].var.array()).matrix();
  }
  return score;
}

// ---------------------------------------------------------------------------
// SampleSet
// ---------------------------------------------------------------------------

/// A batch of d-dimensional samples with provenance. Rows are samples.
struct SampleSet {
  int dim = 0;
  MatrixXd data;  // n x dim
  std::string provenance;
  std::uint64_t seed = 0;

  SampleSet() = default;
  SampleSet(int d, MatrixXd rows, std::string label, std::uint64_t used_seed)
      : dim(d), data(std::move(rows)), provenance(std::move(label)), seed(used_seed) {
    if (data.cols() != dim) throw DimensionError("SampleSet: rows must have length dim");
  }

  Eigen::Index size() const { return data.rows(); }
  VectorXd row(Eigen::Index i) const { return data.row(i).transpose(); }
  /// 1-D convenience view.
  VectorXd column0() const { return data.col(0); }
};

/// n i.i.d. draws from the mixture: component chosen categorically by weight,
/// then a diagonal Gaussian draw. Deterministic given the stream.
inline SampleSet mixture_sample(const GaussianMixture& m, Eigen::Index n, RngStream& rng) {
  if (n < 1) throw InvariantError("mixture_sample: n must be >= 1");
  MatrixXd out(n, m.dim());
  const auto& comps = m.components();
  for (Eigen::Index s = 0; s < n; ++s) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = comps.size() - 1;
    for (std::size_t j = 0; j < comps.size(); ++j) {
      cum += comps[j].weight;
      if (u < cum) {
        pick = j;
        break;
      }
    }
    for (int i = 0; i < m.dim(); ++i)
      out(s, i) = comps[pick].mean[i] + std::sqrt(comps[pick].var[i]) * rng.gaussian();
  }
  return SampleSet(m.dim(), std::move(out), "mixture_sample", rng.id());
}

// ---------------------------------------------------------------------------
// OuSchedule
// ---------------------------------------------------------------------------

/// Forward Ornstein-Uhlenbeck parameters: dX = -a X dt + sigma dW on [0, T]
/// with N discretization steps (h = T / N). Stationary law is
/// N(0, sigma^2 / (2a) I).
struct OuSchedule {
  double a = 1.0;
  double sigma = 1.4142135623730951;  // sqrt(2): stationary N(0, 1)
  double horizon_T = 5.0;
  int steps_N = 500;

  OuSchedule() = default;
  OuSchedule(double drift, double diffusion, double horizon, int steps)
      : a(drift), sigma(diffusion), horizon_T(horizon), steps_N(steps) {
    validate();
  }

  void validate() const {
    if (!(a > 0.0)) throw InvariantError("OuSchedule: a must be > 0");
    if (!(sigma > 0.0)) throw InvariantError("OuSchedule: sigma must be > 0");
    if (!(horizon_T > 0.0)) throw InvariantError("OuSchedule: horizon_T must be > 0");
    if (steps_N < 1) throw InvariantError("OuSchedule: steps_N must be >= 1");
    if (!std::isfinite(stationary_var()) || !(stationary_var() > 0.0))
      throw InvariantError("OuSchedule: stationary variance must be finite and positive");
  }

  double step_h() const { return horizon_T / steps_N; }
  double stationary_var() const { return sigma * sigma / (2.0 * a); }
};

// ---------------------------------------------------------------------------
// SimplexWeights
// ---------------------------------------------------------------------------

/// Fusion weights lambda on the probability simplex. Entries must lie in
/// [0, 1] (tiny rounding excursions are clamped) and sum to 1 within 1e-10.
class SimplexWeights {
 public:
  explicit SimplexWeights(VectorXd lambda) : lambda_(std::move(lambda)) {
    if (lambda_.size() < 1) throw InvariantError("SimplexWeights: k must be positive");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
      const double v = lambda_[i];
      if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12)
        throw InvariantError("SimplexWeights: entries must lie in [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw InvariantError("SimplexWeights: entries must sum to 1 within 1e-10");
    for (Eigen::Index i = 0; i < lambda_.size(); ++i) lambda_[i] = std::clamp(lambda_[i], 0.0, 1.0);
  }

  static SimplexWeights uniform(int k) { return SimplexWeights(VectorXd::Constant(k, 1.0 / k)); }

  static SimplexWeights unit(int k, int index) {
    VectorXd v = VectorXd::Zero(k);
    v[index] = 1.0;
    return SimplexWeights(std::move(v));
  }

  int k() const { return static_cast<int>(lambda_.size()); }
  const VectorXd& lambda() const { return lambda_; }
  double operator[](Eigen::Index i) const { return lambda_[i]; }

 private:
  VectorXd lambda_;
};

// ---------------------------------------------------------------------------
// ScoreField
// ---------------------------------------------------------------------------

/// Time-indexed vector field s(t, x). Implementations must be deterministic
/// given (t, x) and reentrant; handles are immutable and shareable.
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual int dim() const = 0;
  virtual VectorXd evaluate(double t, const VectorXd& x) const = 0;

  /// Evaluate one time against many states (rows of xs). The default defers to
  /// evaluate() row by row; implementations may override with a batched path.
  /// Results must be deterministic for identical (t, xs) arguments; batched
  /// arithmetic may regroup sums relative to evaluate().
  virtual void evaluate_batch(double t, const Eigen::Ref<const MatrixXd>& xs, Eigen::Ref<MatrixXd> out) const {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out.row(i) = evaluate(t, xs.row(i).transpose()).transpose();
  }
};

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Uniform quadrature grid in one or two dimensions, with trapezoidal weights.
struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int n_points = 2;
};

class Grid {
 public:
  explicit Grid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) throw InvariantError("Grid: dim must be 1 or 2");
    for (const auto& ax : axes_) {
      if (!(ax.lo < ax.hi)) throw InvariantError("Grid: lo must be < hi");
      if (ax.n_points < 2) throw InvariantError("Grid: n_points must be >= 2 per axis");
    }
  }

  static Grid uniform1d(double lo, double hi, int n) { return Grid({GridAxis{lo, hi, n}}); }

  /// Smallest axis-aligned box covering every mixture's mean +/- n_stds
  /// standard deviations (per component), discretized per axis.
  static Grid cover(const std::vector<GaussianMixture>& refs, int points_per_axis, double n_stds = 8.0) {
    if (refs.empty()) throw InvariantError("Grid::cover: needs at least one mixture");
    const int d = refs.front().dim();
    std::vector<GridAxis> axes(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (const auto& m : refs) {
        if (m.dim() != d) throw DimensionError("Grid::cover: mixtures must share dim");
        for (const auto& c : m.components()) {
          const double s = std::sqrt(c.var[i]);
          lo = std::min(lo, c.mean[i] - n_stds * s);
          hi = std::max(hi, c.mean[i] + n_stds * s);
        }
      }
      axes[static_cast<std::size_t>(i)] = GridAxis{lo, hi, points_per_axis};
    }
    return Grid(std::move(axes));
  }

  int dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<GridAxis>& axes() const { return axes_; }

  double step(int axis) const {
    const auto& ax = axes_[static_cast<std::size_t>(axis)];
    return (ax.hi - ax.lo) / (ax.n_points - 1);
  }

  /// Volume of one full cell (product of axis steps).
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= step(i);
    return v;
  }

  Eigen::Index num_points() const {
    Eigen::Index n = 1;
    for (const auto& ax : axes_) n *= ax.n_points;
    return n;
  }

  /// Grid point for a flattened index (axis 0 major).
  VectorXd point(Eigen::Index flat) const {
    VectorXd x(dim());
    for (int i = dim() - 1; i >= 0; --i) {
      const auto& ax = axes_[static_cast<std::size_t>(i)];
      const Eigen::Index idx = flat % ax.n_points;
      flat /= ax.n_points;
      x[i] = ax.lo + static_cast<double>(idx) * step(i);
    }
    return x;
  }

  /// Trapezoidal quadrature weight of a flattened index (includes cell volume).
  double quad_weight(Eigen::Index flat) const {
    double w = 1.0;
    for (int i = dim() - 1; i >= 0; --i) {
      const auto& ax = axes_[static_cast<std::size_t>(i)];
      const Eigen::Index idx = flat % ax.n_points;
      flat /= ax.n_points;
      const bool edge = (idx == 0 || idx == ax.n_points - 1);
      w *= step(i) * (edge ? 0.5 : 1.0);
    }
    return w;
  }

  /// All axis-0 coordinates (useful for 1-D exports).
  VectorXd axis_points(int axis) const {
    const auto& ax = axes_[static_cast<std::size_t>(axis)];
    VectorXd p(ax.n_points);
    for (int i = 0; i < ax.n_points; ++i) p[i] = ax.lo + i * step(axis);
    return p;
  }

 private:
  std::vector<GridAxis> axes_;
};

/// Trapezoidal integral of values sampled on the grid.
inline double grid_integral(const Grid& g, const VectorXd& values) {
  if (values.size() != g.num_points()) throw DimensionError("grid_integral: values size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) acc += g.quad_weight(i) * values[i];
  return acc;
}

// ---------------------------------------------------------------------------
// JSON serialization (field names are part of the exchange format)
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const GaussianMixture& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components()) {
    comps.push_back({{"weight", c.weight},
                     {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                     {"var", std::vector<double>(c.var.data(), c.var.data() + c.var.size())}});
  }
  return nlohmann::json{{"dim", m.dim()}, {"components", comps}};
}

inline GaussianMixture mixture_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("components"))
    throw SchemaError("GaussianMixture: expected {dim, components}");
  const int dim = j.at("dim").get<int>();
  std::vector<MixtureComponent> comps;
  for (const auto& cj : j.at("components")) {
    MixtureComponent c;
    c.weight = cj.at("weight").get<double>();
    const auto mean = cj.at("mean").get<std::vector<double>>();
    const auto var = cj.at("var").get<std::vector<double>>();
    c.mean = Eigen::Map<const VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    c.var = Eigen::Map<const VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
    comps.push_back(std::move(c));
  }
  return GaussianMixture(dim, std::move(comps));
}

}  // namespace scorefusion
