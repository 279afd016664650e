#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "scorefusion/barycenter.hpp"
#include "scorefusion/core.hpp"
#include "scorefusion/ou.hpp"
#include "scorefusion/sampler.hpp"

namespace scorefusion {

// Distribution-level fusion baseline. The objective is the lambda-dependent
// part of KL(target || barycenter(lambda)):
//   F(lambda) = -(1/n) sum_x sum_i lambda_i log p_i(x) + log Z(lambda),
// which is convex in lambda (log Z is a log-partition). Its gradient is
//   dF/dlambda_i = -E_target[log p_i] + E_barycenter(lambda)[log p_i],
// and the feasible set is the probability simplex, solved with Frank-Wolfe.

struct FrankWolfeTrace {
  std::vector<SimplexWeights> iterates;  // x_1 = start, ..., x_{tau_max+1}
  std::vector<double> objective;         // F at each iterate
  std::vector<double> gap;               // <grad F(x_tau), x_tau - v_tau> per iteration
  int aborted_at = -1;                   // iteration with a non-finite gradient, -1 if none
};

/// Objective/gradient evaluator with the reference table and target statistics
/// precomputed once. vf_objective / vf_gradient / run_vanilla_fusion and the
/// test-side grid-search oracles all share this path.
class VanillaObjective {
 public:
  VanillaObjective(const SampleSet& target, const std::vector<LogDensityFn>& refs, const Grid& g)
      : table_(refs, g), target_mean_log_p_(static_cast<Eigen::Index>(refs.size())) {
    if (g.dim() > 2) throw DimensionError("vanilla fusion: dim must be <= 2");
    const Eigen::Index n = target.size();
    if (n == 0) throw InvariantError("vanilla fusion: target sample set is empty");
    std::vector<std::size_t> flagged;
    VectorXd acc = VectorXd::Zero(static_cast<Eigen::Index>(refs.size()));
    for (Eigen::Index s = 0; s < n; ++s) {
      const VectorXd x = target.row(s);
      bool bad = false;
      for (std::size_t i = 0; i < refs.size(); ++i) {
        const double lp = refs[i](x);
        if (!std::isfinite(lp)) bad = true;
        acc[static_cast<Eigen::Index>(i)] += lp;
      }
      if (bad) flagged.push_back(static_cast<std::size_t>(s));
    }
    if (!flagged.empty())
      throw FlaggedSampleError("vanilla fusion: " + std::to_string(flagged.size()) +
                                   " target samples outside machine support of a reference",
                               std::move(flagged));
    target_mean_log_p_ = acc / static_cast<double>(n);
  }

  int k() const { return table_.k(); }

  double objective(const SimplexWeights& w) const {
    return -target_mean_log_p_.dot(w.lambda()) + table_.log_partition(w);
  }

  VectorXd gradient(const SimplexWeights& w) const {
    const GridDensity bary = table_.density(w);
    VectorXd grad(table_.k());
    for (int i = 0; i < table_.k(); ++i) {
      double e_bary = 0.0;
      for (Eigen::Index gi = 0; gi < bary.values.size(); ++gi)
        e_bary += bary.grid.quad_weight(gi) * bary.values[gi] * table_.log_p(i, gi);
      grad[i] = -target_mean_log_p_[i] + e_bary;
    }
    return grad;
  }

 private:
  detail::GridRefTable table_;
  VectorXd target_mean_log_p_;
};

inline double vf_objective(const SimplexWeights& w, const SampleSet& target, const std::vector<LogDensityFn>& refs,
                           const Grid& g) {
  return VanillaObjective(target, refs, g).objective(w);
}

inline VectorXd vf_gradient(const SimplexWeights& w, const SampleSet& target, const std::vector<LogDensityFn>& refs,
                            const Grid& g) {
  return VanillaObjective(target, refs, g).gradient(w);
}

/// Frank-Wolfe with the function-agnostic step size rule: gamma_1 = 1 and
/// gamma_tau = 2 / (tau + 3) afterwards. The linear subproblem over the
/// simplex is solved at a vertex, ties broken by lowest index. A non-finite
/// gradient aborts with the trace so far.
inline FrankWolfeTrace frank_wolfe(const std::function<double(const SimplexWeights&)>& objective,
                                   const std::function<VectorXd(const SimplexWeights&)>& gradient,
                                   const SimplexWeights& w0, int tau_max) {
  if (tau_max < 1) throw InvariantError("frank_wolfe: tau_max must be >= 1");
  FrankWolfeTrace trace;
  SimplexWeights x = w0;
  for (int tau = 1; tau <= tau_max; ++tau) {
    const VectorXd grad = gradient(x);
    if (!grad.allFinite()) {
      trace.aborted_at = tau;
      break;
    }
    int vertex = 0;
    for (int i = 1; i < x.k(); ++i)
      if (grad[i] < grad[vertex]) vertex = i;
    trace.iterates.push_back(x);
    trace.objective.push_back(objective(x));
    trace.gap.push_back(grad.dot(x.lambda()) - grad[vertex]);

    const double gamma = (tau == 1) ? 1.0 : 2.0 / (tau + 3.0);
    VectorXd next = (1.0 - gamma) * x.lambda();
    next[vertex] += gamma;
    x = SimplexWeights(std::move(next));
  }
  trace.iterates.push_back(x);
  trace.objective.push_back(objective(x));
  return trace;
}

struct VanillaFusionResult {
  SimplexWeights weights;
  FrankWolfeTrace trace;
  /// lambda-fused analytic score of the references, ready for reverse_sample.
  std::shared_ptr<const ScoreField> fused;
};

/// Vanilla fusion end to end: exact mixture log-densities as the reference
/// oracles, Frank-Wolfe from the uniform start, and the fused score field for
/// the sampling phase.
inline VanillaFusionResult run_vanilla_fusion(const SampleSet& target, const std::vector<GaussianMixture>& refs,
                                              const OuSchedule& schedule, const Grid& g, int tau_max) {
  std::vector<LogDensityFn> fns;
  fns.reserve(refs.size());
  for (const auto& m : refs) fns.push_back(log_density_fn(m));
  const VanillaObjective problem(target, fns, g);
  FrankWolfeTrace trace = frank_wolfe([&](const SimplexWeights& w) { return problem.objective(w); },
                                      [&](const SimplexWeights& w) { return problem.gradient(w); },
                                      SimplexWeights::uniform(static_cast<int>(refs.size())), tau_max);
  SimplexWeights weights = trace.iterates.back();
  std::vector<std::shared_ptr<const ScoreField>> fields;
  fields.reserve(refs.size());
  for (const auto& m : refs) fields.push_back(analytic_score(m, schedule));
  auto fused = fused_score(std::move(fields), weights);
  return VanillaFusionResult{std::move(weights), std::move(trace), std::move(fused)};
}

}  // namespace scorefusion
