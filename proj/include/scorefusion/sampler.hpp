#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "scorefusion/core.hpp"

namespace scorefusion {

// Reverse-time generation. The discretized backward SDE freezes the score at
// the left endpoint of each interval: for l = 0..N-1 and t in [lh, (l+1)h],
//   dY = (a Y + sigma^2 s(T - lh, Y(lh))) dt + sigma dW,   Y(0) ~ N(0, sigma^2/2a I).

enum class Integrator {
  euler_maruyama,  // one explicit step per interval
  exponential      // exact Gaussian solve of the frozen-coefficient linear SDE
};

struct ReverseConfig {
  OuSchedule schedule;
  Integrator integrator = Integrator::exponential;
  Eigen::Index n_samples = 1;
  std::uint64_t seed = 0;
};

/// lambda-weighted combination of score fields: evaluate(t, x) =
/// sum_i lambda_i fields[i](t, x). Zero-weight fields are skipped, so a
/// one-hot weight reproduces the selected field bit-exactly.
class FusedScore final : public ScoreField {
 public:
  FusedScore(std::vector<std::shared_ptr<const ScoreField>> fields, SimplexWeights w)
      : fields_(std::move(fields)), weights_(std::move(w)) {
    if (fields_.empty()) throw InvariantError("FusedScore: needs at least one field");
    if (weights_.k() != static_cast<int>(fields_.size()))
      throw DimensionError("FusedScore: weights length must match field count");
    for (const auto& f : fields_) {
      if (!f) throw InvariantError("FusedScore: null field");
      if (f->dim() != fields_.front()->dim()) throw DimensionError("FusedScore: fields must share dim");
    }
  }

  int dim() const override { return fields_.front()->dim(); }

  VectorXd evaluate(double t, const VectorXd& x) const override {
    VectorXd acc;
    bool first = true;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      const double w = weights_[static_cast<Eigen::Index>(i)];
      if (w == 0.0) continue;
      if (first) {
        acc = w * fields_[i]->evaluate(t, x);
        first = false;
      } else {
        acc += w * fields_[i]->evaluate(t, x);
      }
    }
    return acc;
  }

  void evaluate_batch(double t, const Eigen::Ref<const MatrixXd>& xs, Eigen::Ref<MatrixXd> out) const override {
    MatrixXd scratch(xs.rows(), dim());
    bool first = true;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      const double w = weights_[static_cast<Eigen::Index>(i)];
      if (w == 0.0) continue;
      fields_[i]->evaluate_batch(t, xs, scratch);
      if (first) {
        out = w * scratch;
        first = false;
      } else {
        out += w * scratch;
      }
    }
  }

  const SimplexWeights& weights() const { return weights_; }

 private:
  std::vector<std::shared_ptr<const ScoreField>> fields_;
  SimplexWeights weights_;
};

inline std::shared_ptr<const ScoreField> fused_score(std::vector<std::shared_ptr<const ScoreField>> fields,
                                                     const SimplexWeights& w) {
  return std::make_shared<FusedScore>(std::move(fields), w);
}

namespace detail {

// Trajectories are processed in fixed-size row blocks so that batched score
// evaluations see the same shapes regardless of thread count; together with
// per-trajectory substreams this makes the output bit-identical for any
// worker count.
inline constexpr Eigen::Index kSamplerBlock = 512;

struct StepCoefficients {
  double carry;     // multiplier on Y(lh)
  double score_in;  // multiplier on the frozen score
  double noise_sd;  // standard deviation of the additive Gaussian
};

inline StepCoefficients step_coefficients(const OuSchedule& s, Integrator integrator) {
  const double h = s.step_h();
  StepCoefficients c{};
  if (integrator == Integrator::euler_maruyama) {
    c.carry = 1.0 + s.a * h;
    c.score_in = s.sigma * s.sigma * h;
    c.noise_sd = s.sigma * std::sqrt(h);
  } else {
    // Exact moments of dY = (aY + const) dt + sigma dW over one interval:
    // mean e^{ah} Y + (e^{ah}-1)/a * const, variance sigma^2 (e^{2ah}-1)/(2a).
    const double eah = std::exp(s.a * h);
    c.carry = eah;
    c.score_in = s.sigma * s.sigma * (eah - 1.0) / s.a;
    c.noise_sd = std::sqrt(s.stationary_var() * std::expm1(2.0 * s.a * h));
  }
  return c;
}

}  // namespace detail

/// Simulate the discretized backward SDE for n_samples independent
/// trajectories and return the terminal states Y(T). Deterministic given the
/// config seed, regardless of thread count (0 = hardware concurrency).
inline SampleSet reverse_sample(const ScoreField& score, const ReverseConfig& cfg, int threads = 0) {
  cfg.schedule.validate();
  if (cfg.n_samples < 1) throw InvariantError("reverse_sample: n_samples must be >= 1");
  const int d = score.dim();
  const Eigen::Index n = cfg.n_samples;
  const int N = cfg.schedule.steps_N;
  const double T = cfg.schedule.horizon_T;
  const double h = cfg.schedule.step_h();
  const double prior_sd = std::sqrt(cfg.schedule.stationary_var());
  const detail::StepCoefficients coef = detail::step_coefficients(cfg.schedule, cfg.integrator);

  MatrixXd states(n, d);
  const RngStream root(cfg.seed);

  const Eigen::Index n_blocks = (n + detail::kSamplerBlock - 1) / detail::kSamplerBlock;
  std::atomic<Eigen::Index> next_block{0};
  // First non-finite state per block, as (step, trajectory); resolved to the
  // lexicographically smallest after the join so the reported error does not
  // depend on scheduling.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> failures;
  std::mutex failures_mutex;

  auto worker = [&]() {
    MatrixXd scores;
    MatrixXd block;
    for (;;) {
      const Eigen::Index bi = next_block.fetch_add(1);
      if (bi >= n_blocks) return;
      const Eigen::Index row0 = bi * detail::kSamplerBlock;
      const Eigen::Index rows = std::min<Eigen::Index>(detail::kSamplerBlock, n - row0);
      block.resize(rows, d);
      scores.resize(rows, d);

      std::vector<RngStream> streams;
      streams.reserve(static_cast<std::size_t>(rows));
      for (Eigen::Index r = 0; r < rows; ++r)
        streams.push_back(root.substream(static_cast<std::uint64_t>(row0 + r)));
      for (Eigen::Index r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) block(r, j) = prior_sd * streams[static_cast<std::size_t>(r)].gaussian();

      bool failed = false;
      for (int l = 0; l < N && !failed; ++l) {
        const double t_score = T - l * h;
        score.evaluate_batch(t_score, block, scores);
        for (Eigen::Index r = 0; r < rows; ++r) {
          auto& stream = streams[static_cast<std::size_t>(r)];
          for (int j = 0; j < d; ++j)
            block(r, j) = coef.carry * block(r, j) + coef.score_in * scores(r, j) + coef.noise_sd * stream.gaussian();
        }
        if (!block.allFinite()) {
          for (Eigen::Index r = 0; r < rows && !failed; ++r) {
            if (!block.row(r).allFinite()) {
              std::lock_guard<std::mutex> lock(failures_mutex);
              failures.emplace_back(l, row0 + r);
              failed = true;
            }
          }
        }
      }
      if (!failed) states.middleRows(row0, rows) = block;
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(std::min<Eigen::Index>(n_threads, n_blocks));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!failures.empty()) {
    auto worst = *std::min_element(failures.begin(), failures.end());
    throw DivergedTrajectoryError(static_cast<std::size_t>(worst.first), static_cast<std::size_t>(worst.second));
  }
  return SampleSet(d, std::move(states), "reverse_sample", cfg.seed);
}

}  // namespace scorefusion
