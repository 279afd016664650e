#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "scorefusion/core.hpp"
#include "scorefusion/ou.hpp"

namespace scorefusion {

// ScoreFusion training: learn lambda on the simplex by minimizing the
// truncated-horizon score-matching loss of the lambda-linear score family
//   L(lambda) = E_{t ~ U[t_min, T~]} gamma(t) E ||sum_i lambda_i s_i(t, X_t) - target(t, X_t)||^2,
// whose Monte-Carlo estimate is the quadratic lambda' A lambda - 2 b' lambda + c.
// The default training target is the conditional (denoising) score; an exact
// marginal-score target is kept alongside as a cross-check.

enum class GammaWeighting { uniform, sigma_squared };

struct FusionTrainConfig {
  double T_tilde = 0.25;   // truncated training horizon, default 0.05 * T
  double t_min = 0.005;    // lower time cutoff, default 1e-3 * T
  GammaWeighting gamma_weighting = GammaWeighting::uniform;
  int n_mc = 100000;       // Monte-Carlo pairs
  int batch = 256;         // SGD minibatch
  double lr = 0.05;        // SGD learning rate on the softmax parameters
  int max_epochs = 300;
  std::uint64_t seed = 0;

  static FusionTrainConfig defaults(const OuSchedule& s) {
    FusionTrainConfig cfg;
    cfg.T_tilde = 0.05 * s.horizon_T;
    cfg.t_min = 1e-3 * s.horizon_T;
    return cfg;
  }

  void validate(const OuSchedule& s) const {
    if (!(0.0 < t_min && t_min < T_tilde && T_tilde <= s.horizon_T))
      throw InvariantError("FusionTrainConfig: need 0 < t_min < T_tilde <= T");
    if (n_mc < 1) throw InvariantError("FusionTrainConfig: n_mc must be >= 1");
    if (batch < 1 || max_epochs < 1 || !(lr > 0.0)) throw InvariantError("FusionTrainConfig: bad SGD parameters");
  }
};

inline double gamma_value(GammaWeighting g, const OuSchedule& s, double /*t*/) {
  return g == GammaWeighting::uniform ? 1.0 : s.sigma * s.sigma;
}

/// Quadratic form of the Monte-Carlo fusion loss over the simplex.
struct FusionQuadratic {
  MatrixXd A;   // k x k Gram matrix of the auxiliary scores
  VectorXd b;   // cross moments with the regression target
  double c = 0.0;  // target self term
  int n_mc = 0;

  int k() const { return static_cast<int>(A.rows()); }
};

inline double fusion_loss(const FusionQuadratic& q, const VectorXd& lambda) {
  return lambda.dot(q.A * lambda) - 2.0 * q.b.dot(lambda) + q.c;
}

/// One Monte-Carlo pair: a data point, a training time, and the diffused state.
struct DsmDraw {
  VectorXd x0;
  double t = 0.0;
  VectorXd x_t;
};

/// Draw the Monte-Carlo pairs: x0 resampled with replacement from the data,
/// t ~ U[t_min, T_tilde], x_t from the forward kernel. Pair i consumes only
/// rng.substream(i), so the pool is reproducible and order-independent.
inline std::vector<DsmDraw> draw_dsm_pairs(const SampleSet& data, const OuSchedule& s, const FusionTrainConfig& cfg,
                                           RngStream& rng) {
  cfg.validate(s);
  if (data.size() == 0) throw InvariantError("draw_dsm_pairs: data is empty");
  std::vector<DsmDraw> draws(static_cast<std::size_t>(cfg.n_mc));
  for (int i = 0; i < cfg.n_mc; ++i) {
    RngStream sub = rng.substream(static_cast<std::uint64_t>(i));
    DsmDraw& d = draws[static_cast<std::size_t>(i)];
    d.x0 = data.row(static_cast<Eigen::Index>(sub.below(static_cast<std::uint64_t>(data.size()))));
    d.t = cfg.t_min + (cfg.T_tilde - cfg.t_min) * sub.uniform();
    d.x_t = forward_sample(d.x0, s, d.t, sub);
  }
  return draws;
}

/// Accumulate the quadratic from given draws and per-draw regression targets.
inline FusionQuadratic assemble_quadratic_from_draws(const std::vector<std::shared_ptr<const ScoreField>>& aux,
                                                     const std::vector<DsmDraw>& draws,
                                                     const std::vector<VectorXd>& targets, const OuSchedule& s,
                                                     GammaWeighting gamma) {
  if (aux.empty()) throw InvariantError("assemble_quadratic: needs at least one auxiliary");
  if (draws.empty()) throw InvariantError("assemble_quadratic: n_mc must be >= 1");
  if (draws.size() != targets.size()) throw DimensionError("assemble_quadratic: draws/targets size mismatch");
  const int k = static_cast<int>(aux.size());
  const int d = aux.front()->dim();
  for (const auto& f : aux)
    if (f->dim() != d) throw DimensionError("assemble_quadratic: auxiliaries must share dim");

  FusionQuadratic q;
  q.A = MatrixXd::Zero(k, k);
  q.b = VectorXd::Zero(k);
  q.c = 0.0;
  q.n_mc = static_cast<int>(draws.size());
  MatrixXd S(k, d);
  for (std::size_t p = 0; p < draws.size(); ++p) {
    const DsmDraw& dr = draws[p];
    for (int i = 0; i < k; ++i) S.row(i) = aux[static_cast<std::size_t>(i)]->evaluate(dr.t, dr.x_t).transpose();
    const double g = gamma_value(gamma, s, dr.t);
    q.A.noalias() += g * (S * S.transpose());
    q.b.noalias() += g * (S * targets[p]);
    q.c += g * targets[p].squaredNorm();
  }
  const double inv = 1.0 / static_cast<double>(draws.size());
  q.A *= inv;
  q.b *= inv;
  q.c *= inv;
  return q;
}

/// Assemble the fusion quadratic with denoising targets.
inline FusionQuadratic assemble_quadratic(const std::vector<std::shared_ptr<const ScoreField>>& aux,
                                          const SampleSet& data, const OuSchedule& s, const FusionTrainConfig& cfg,
                                          RngStream& rng) {
  const std::vector<DsmDraw> draws = draw_dsm_pairs(data, s, cfg, rng);
  std::vector<VectorXd> targets(draws.size());
  for (std::size_t p = 0; p < draws.size(); ++p)
    targets[p] = conditional_score(draws[p].x_t, draws[p].x0, s, draws[p].t);
  return assemble_quadratic_from_draws(aux, draws, targets, s, cfg.gamma_weighting);
}

// ---------------------------------------------------------------------------
// Simplex-constrained quadratic minimization
// ---------------------------------------------------------------------------

struct SimplexQpSolution {
  SimplexWeights weights;
  double loss = 0.0;
  bool regularized = false;  // a singular face system needed 1e-10 I
};

/// Euclidean projection onto the probability simplex.
inline VectorXd project_to_simplex(const VectorXd& v) {
  const Eigen::Index k = v.size();
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cum += u[static_cast<std::size_t>(j)];
    const double candidate = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0);
}

/// Minimize lambda' A lambda - 2 b' lambda over the simplex. For k <= 6 every
/// face's equality-constrained KKT system is enumerated; feasible candidates
/// are compared by loss, ties broken by lexicographically smaller lambda.
/// Larger k falls back to projected gradient descent.
inline SimplexQpSolution solve_simplex_quadratic(const FusionQuadratic& q) {
  const int k = q.k();
  if (k < 1 || q.b.size() != k) throw DimensionError("solve_simplex_quadratic: inconsistent quadratic");
  if (k == 1) return SimplexQpSolution{SimplexWeights(VectorXd::Ones(1)), fusion_loss(q, VectorXd::Ones(1)), false};

  auto finalize = [&](VectorXd lam, bool regularized) {
    lam = lam.cwiseMax(0.0);
    lam /= lam.sum();
    const double loss = fusion_loss(q, lam);
    return SimplexQpSolution{SimplexWeights(std::move(lam)), loss, regularized};
  };

  if (k <= 6) {
    bool have = false;
    VectorXd best;
    double best_loss = 0.0;
    bool any_reg = false;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      std::vector<int> face;
      for (int i = 0; i < k; ++i)
        if (mask & (1u << i)) face.push_back(i);
      const int m = static_cast<int>(face.size());

      MatrixXd As(m, m);
      VectorXd bs(m);
      for (int r = 0; r < m; ++r) {
        bs[r] = q.b[face[static_cast<std::size_t>(r)]];
        for (int cidx = 0; cidx < m; ++cidx)
          As(r, cidx) = q.A(face[static_cast<std::size_t>(r)], face[static_cast<std::size_t>(cidx)]);
      }
      // KKT system of min x'As x - 2 bs'x subject to 1'x = 1.
      auto face_solve = [&](const MatrixXd& Aface, bool* ok) {
        MatrixXd M = MatrixXd::Zero(m + 1, m + 1);
        M.topLeftCorner(m, m) = 2.0 * Aface;
        M.topRightCorner(m, 1).setOnes();
        M.bottomLeftCorner(1, m).setOnes();
        VectorXd rhs(m + 1);
        rhs.head(m) = 2.0 * bs;
        rhs[m] = 1.0;
        Eigen::FullPivLU<MatrixXd> lu(M);
        *ok = lu.isInvertible();
        return *ok ? VectorXd(lu.solve(rhs).head(m)) : VectorXd();
      };

      bool ok = false;
      VectorXd xs = face_solve(As, &ok);
      bool used_reg = false;
      if (!ok) {
        xs = face_solve(As + 1e-10 * MatrixXd::Identity(m, m), &ok);
        used_reg = true;
        if (!ok) continue;
      }
      if ((xs.array() < -1e-9).any()) continue;
      VectorXd lam = VectorXd::Zero(k);
      for (int r = 0; r < m; ++r) lam[face[static_cast<std::size_t>(r)]] = std::max(xs[r], 0.0);
      lam /= lam.sum();
      const double loss = fusion_loss(q, lam);
      const double tie_tol = 1e-12 * (1.0 + std::abs(loss));
      const bool better =
          !have || loss < best_loss - tie_tol ||
          (std::abs(loss - best_loss) <= tie_tol && std::lexicographical_compare(lam.data(), lam.data() + k,
                                                                                 best.data(), best.data() + k));
      if (better) {
        have = true;
        best = lam;
        best_loss = loss;
      }
      any_reg = any_reg || used_reg;
    }
    if (!have) throw InvariantError("solve_simplex_quadratic: no feasible face candidate");
    return finalize(best, any_reg);
  }

  // Projected gradient descent with a Lipschitz step.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.A);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / (2.0 * lmax);
  VectorXd lam = VectorXd::Constant(k, 1.0 / k);
  for (int it = 0; it < 50000; ++it) {
    const VectorXd grad = 2.0 * (q.A * lam - q.b);
    const VectorXd next = project_to_simplex(lam - step * grad);
    const double delta = (next - lam).lpNorm<Eigen::Infinity>();
    lam = next;
    if (delta < 1e-13) break;
  }
  return finalize(lam, false);
}

// ---------------------------------------------------------------------------
// SGD path (softmax parameterization)
// ---------------------------------------------------------------------------

struct SgdResult {
  SimplexWeights weights;
  std::vector<double> loss_curve;  // full-pool loss at the end of each epoch
  bool diverged = false;
};

namespace detail {

inline VectorXd softmax(const VectorXd& theta) {
  const VectorXd z = (theta.array() - theta.maxCoeff()).exp();
  return z / z.sum();
}

}  // namespace detail

/// Minimize the Monte-Carlo fusion loss by minibatch gradient descent on
/// softmax parameters: lambda = softmax(theta), theta initialized i.i.d.
/// N(0, 0.01). The loss is quadratic in lambda, so the gradient is applied
/// through the softmax Jacobian analytically. Stops when the relative
/// full-pool loss change over an epoch falls below 1e-6.
inline SgdResult sgd_train(const std::vector<std::shared_ptr<const ScoreField>>& aux, const SampleSet& data,
                           const OuSchedule& s, const FusionTrainConfig& cfg, RngStream& rng) {
  const std::vector<DsmDraw> draws = draw_dsm_pairs(data, s, cfg, rng);
  const int k = static_cast<int>(aux.size());
  const int d = aux.front()->dim();
  const std::size_t n = draws.size();

  // Per-pair sufficient statistics: G_p = S_p S_p', u_p = S_p target_p.
  std::vector<MatrixXd> G(n);
  std::vector<VectorXd> u(n);
  std::vector<double> gam(n);
  FusionQuadratic pool;
  pool.A = MatrixXd::Zero(k, k);
  pool.b = VectorXd::Zero(k);
  pool.n_mc = static_cast<int>(n);
  MatrixXd S(k, d);
  for (std::size_t p = 0; p < n; ++p) {
    const DsmDraw& dr = draws[p];
    const VectorXd target = conditional_score(dr.x_t, dr.x0, s, dr.t);
    for (int i = 0; i < k; ++i) S.row(i) = aux[static_cast<std::size_t>(i)]->evaluate(dr.t, dr.x_t).transpose();
    gam[p] = gamma_value(cfg.gamma_weighting, s, dr.t);
    G[p] = gam[p] * (S * S.transpose());
    u[p] = gam[p] * (S * target);
    pool.A += G[p];
    pool.b += u[p];
    pool.c += gam[p] * target.squaredNorm();
  }
  const double inv = 1.0 / static_cast<double>(n);
  pool.A *= inv;
  pool.b *= inv;
  pool.c *= inv;

  RngStream init_stream = rng.substream(static_cast<std::uint64_t>(cfg.n_mc));
  VectorXd theta(k);
  for (int i = 0; i < k; ++i) theta[i] = 0.1 * init_stream.gaussian();
  VectorXd lambda = detail::softmax(theta);

  SgdResult result{SimplexWeights(lambda), {}, false};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double prev_loss = fusion_loss(pool, lambda);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    RngStream shuffle_stream = rng.substream(static_cast<std::uint64_t>(cfg.n_mc) + 1 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_stream.below(i)]);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch));
      VectorXd grad_lambda = VectorXd::Zero(k);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const std::size_t p = order[idx];
        grad_lambda += 2.0 * (G[p] * lambda - u[p]);
      }
      grad_lambda /= static_cast<double>(stop - start);
      // Softmax Jacobian: d lambda_j / d theta_l = lambda_j (delta_jl - lambda_l).
      const double dot = grad_lambda.dot(lambda);
      const VectorXd grad_theta = lambda.array() * (grad_lambda.array() - dot);
      theta -= cfg.lr * grad_theta;
      lambda = detail::softmax(theta);
    }

    const double loss = fusion_loss(pool, lambda);
    result.loss_curve.push_back(loss);
    if (!std::isfinite(loss) || !lambda.allFinite()) {
      result.diverged = true;
      break;
    }
    result.weights = SimplexWeights(lambda);
    if (std::abs(loss - prev_loss) < 1e-6 * std::max(std::abs(prev_loss), 1e-12)) break;
    prev_loss = loss;
  }
  return result;
}

// ---------------------------------------------------------------------------
// DSM-vs-exact cross check
// ---------------------------------------------------------------------------

struct OracleDsmGap {
  SimplexWeights lambda_dsm;
  SimplexWeights lambda_exact;
  double gap = 0.0;  // l-infinity distance between the two minimizers
};

/// Assemble the fusion quadratic twice from the same draws, once with the
/// denoising target and once with the exact marginal score of an analytic
/// target, and compare the minimizers. The two regression targets agree in
/// conditional expectation, so the gap is pure Monte-Carlo noise.
inline OracleDsmGap oracle_vs_dsm_check(const std::vector<std::shared_ptr<const ScoreField>>& aux,
                                        const GaussianMixture& target, const OuSchedule& s,
                                        const FusionTrainConfig& cfg, RngStream& rng) {
  RngStream data_stream = rng.substream(1);
  const SampleSet data = mixture_sample(target, cfg.n_mc, data_stream);
  RngStream pair_stream = rng.substream(2);
  const std::vector<DsmDraw> draws = draw_dsm_pairs(data, s, cfg, pair_stream);

  std::vector<VectorXd> dsm_targets(draws.size());
  std::vector<VectorXd> exact_targets(draws.size());
  for (std::size_t p = 0; p < draws.size(); ++p) {
    dsm_targets[p] = conditional_score(draws[p].x_t, draws[p].x0, s, draws[p].t);
    exact_targets[p] = mixture_score(diffuse_mixture(target, s, draws[p].t), draws[p].x_t);
  }
  const FusionQuadratic q_dsm = assemble_quadratic_from_draws(aux, draws, dsm_targets, s, cfg.gamma_weighting);
  const FusionQuadratic q_exact = assemble_quadratic_from_draws(aux, draws, exact_targets, s, cfg.gamma_weighting);
  SimplexQpSolution dsm = solve_simplex_quadratic(q_dsm);
  SimplexQpSolution exact = solve_simplex_quadratic(q_exact);
  const double gap = (dsm.weights.lambda() - exact.weights.lambda()).lpNorm<Eigen::Infinity>();
  return OracleDsmGap{std::move(dsm.weights), std::move(exact.weights), gap};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json quadratic_to_json(const FusionQuadratic& q) {
  std::vector<double> a_rowmajor;
  a_rowmajor.reserve(static_cast<std::size_t>(q.A.size()));
  for (int r = 0; r < q.A.rows(); ++r)
    for (int c = 0; c < q.A.cols(); ++c) a_rowmajor.push_back(q.A(r, c));
  return nlohmann::json{{"schema_version", 1},
                        {"k", q.k()},
                        {"A", a_rowmajor},
                        {"b", std::vector<double>(q.b.data(), q.b.data() + q.b.size())},
                        {"c", q.c},
                        {"n_mc", q.n_mc}};
}

inline FusionQuadratic quadratic_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema_version", -1) != 1)
    throw SchemaError("FusionQuadratic: unknown schema version");
  FusionQuadratic q;
  const int k = j.at("k").get<int>();
  const auto a = j.at("A").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (static_cast<int>(a.size()) != k * k || static_cast<int>(b.size()) != k)
    throw SchemaError("FusionQuadratic: inconsistent sizes");
  q.A.resize(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) q.A(r, c) = a[static_cast<std::size_t>(r * k + c)];
  q.b = Eigen::Map<const VectorXd>(b.data(), k);
  q.c = j.at("c").get<double>();
  q.n_mc = j.at("n_mc").get<int>();
  return q;
}

inline nlohmann::json weights_to_json(const SimplexWeights& w) {
  return nlohmann::json{{"k", w.k()},
                        {"lambda", std::vector<double>(w.lambda().data(), w.lambda().data() + w.k())}};
}

inline SimplexWeights weights_from_json(const nlohmann::json& j) {
  const auto lam = j.at("lambda").get<std::vector<double>>();
  return SimplexWeights(Eigen::Map<const VectorXd>(lam.data(), static_cast<Eigen::Index>(lam.size())));
}

}  // namespace scorefusion
