#pragma once

#include <cmath>
#include <memory>

#include "scorefusion/core.hpp"

namespace scorefusion {

// Closed-form forward OU machinery. The transition kernel of
// dX = -a X dt + sigma dW is Gaussian:
//   X_t | X_0 = x0  ~  N(e^{-a t} x0, var_t I),
//   var_t = (sigma^2 / 2a) (1 - e^{-2 a t}).

struct TransitionParams {
  double decay = 1.0;  // e^{-a t}
  double var_t = 0.0;  // (sigma^2 / 2a)(1 - e^{-2 a t})
};

inline TransitionParams transition_params(const OuSchedule& s, double t) {
  if (!(t >= 0.0)) throw InvariantError("transition_params: t must be >= 0");
  TransitionParams p;
  p.decay = std::exp(-s.a * t);
  // expm1 keeps var_t accurate for small t.
  p.var_t = -s.stationary_var() * std::expm1(-2.0 * s.a * t);
  return p;
}

/// Exact marginal of the mixture diffused for time t: each component
/// (w, mu, v) maps to (w, decay * mu, decay^2 * v + var_t).
inline GaussianMixture diffuse_mixture(const GaussianMixture& m, const OuSchedule& s, double t) {
  const TransitionParams p = transition_params(s, t);
  std::vector<MixtureComponent> comps = m.components();
  for (auto& c : comps) {
    c.mean *= p.decay;
    c.var = (p.decay * p.decay * c.var.array() + p.var_t).matrix();
  }
  return GaussianMixture(m.dim(), std::move(comps));
}

/// One draw from the forward transition kernel started at x0.
inline VectorXd forward_sample(const VectorXd& x0, const OuSchedule& s, double t, RngStream& rng) {
  const TransitionParams p = transition_params(s, t);
  const double sd = std::sqrt(p.var_t);
  VectorXd x(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x[i] = p.decay * x0[i] + sd * rng.gaussian();
  return x;
}

/// Score of the Gaussian transition kernel: -(x_t - e^{-a t} x0) / var_t.
/// This is the denoising target used in place of the intractable marginal
/// score; the substitution changes the training loss only by a constant that
/// does not depend on the trainable weights.
inline VectorXd conditional_score(const VectorXd& x_t, const VectorXd& x0, const OuSchedule& s, double t) {
  if (x_t.size() != x0.size()) throw DimensionError("conditional_score: x_t and x0 must share length");
  const TransitionParams p = transition_params(s, t);
  if (!(p.var_t > 0.0)) throw SingularTimeError("conditional_score: var_t = 0 at t = " + std::to_string(t));
  return -(x_t - p.decay * x0) / p.var_t;
}

/// Exact score oracle of a diffused mixture: evaluate(t, x) equals
/// mixture_score(diffuse_mixture(m, s, t), x).
class AnalyticMixtureScore final : public ScoreField {
 public:
  AnalyticMixtureScore(GaussianMixture m, OuSchedule s) : mixture_(std::move(m)), schedule_(s) {}

  int dim() const override { return mixture_.dim(); }

  VectorXd evaluate(double t, const VectorXd& x) const override {
    return mixture_score(diffuse_mixture(mixture_, schedule_, t), x);
  }

  void evaluate_batch(double t, const Eigen::Ref<const MatrixXd>& xs, Eigen::Ref<MatrixXd> out) const override {
    const GaussianMixture diffused = diffuse_mixture(mixture_, schedule_, t);
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
      out.row(i) = mixture_score(diffused, xs.row(i).transpose()).transpose();
  }

  const GaussianMixture& mixture() const { return mixture_; }
  const OuSchedule& schedule() const { return schedule_; }

 private:
  GaussianMixture mixture_;
  OuSchedule schedule_;
};

inline std::shared_ptr<const ScoreField> analytic_score(const GaussianMixture& m, const OuSchedule& s) {
  return std::make_shared<AnalyticMixtureScore>(m, s);
}

}  // namespace scorefusion
