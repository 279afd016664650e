#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "scorefusion/core.hpp"
#include "scorefusion/ou.hpp"

namespace scorefusion {

// From-scratch baseline: a small fully-connected score network trained by
// denoising score matching. Two tanh hidden layers of width 64 by default,
// sinusoidal time conditioning, manual backpropagation (the architecture is
// fixed and tiny; the finite-difference tests stand in for an autodiff
// framework's guarantees).

/// Sinusoidal time features [sin(w_j t), cos(w_j t)] with dim/2 frequencies
/// geometrically spaced over [1, 1000].
inline VectorXd time_embedding(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw InvariantError("time_embedding: dim must be even and >= 2");
  const int half = dim / 2;
  VectorXd e(dim);
  for (int j = 0; j < half; ++j) {
    const double omega = half == 1 ? 1.0 : std::pow(1000.0, static_cast<double>(j) / (half - 1));
    e[2 * j] = std::sin(omega * t);
    e[2 * j + 1] = std::cos(omega * t);
  }
  return e;
}

struct MlpArchitecture {
  int input_dim = 1;
  int time_embed_dim = 16;
  std::vector<int> hidden = {64, 64};

  /// Layer widths including input and output: [d + emb, h..., d].
  std::vector<int> layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(input_dim + time_embed_dim);
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(input_dim);
    return sizes;
  }

  int param_count() const {
    const auto sizes = layer_sizes();
    int n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return n;
  }

  void validate() const {
    if (input_dim < 1) throw InvariantError("MlpArchitecture: input_dim must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
      throw InvariantError("MlpArchitecture: time_embed_dim must be even and >= 2");
    if (hidden.empty()) throw InvariantError("MlpArchitecture: needs at least one hidden layer");
    for (int h : hidden)
      if (h < 1) throw InvariantError("MlpArchitecture: hidden widths must be >= 1");
  }
};

/// Fully-connected tanh score network over the concatenated input
/// [x, time_embedding(t)]. Parameters live in one flat vector (per layer:
/// row-major W, then b). Immutable once constructed; trained instances are
/// drop-in ScoreField implementations.
class MlpScoreNet final : public ScoreField {
 public:
  MlpScoreNet(MlpArchitecture arch, VectorXd params) : arch_(std::move(arch)), params_(std::move(params)) {
    arch_.validate();
    if (params_.size() != arch_.param_count())
      throw InvariantError("MlpScoreNet: parameter count does not match the architecture descriptor");
    if (!params_.allFinite()) throw PoisonedModelError("MlpScoreNet: non-finite parameters");
  }

  static MlpScoreNet zeros(MlpArchitecture arch) {
    const int n = arch.param_count();
    return MlpScoreNet(std::move(arch), VectorXd::Zero(n));
  }

  /// Gaussian fan-in initialization; biases start at zero.
  static MlpScoreNet random_init(MlpArchitecture arch, RngStream& rng) {
    arch.validate();
    VectorXd p(arch.param_count());
    const auto sizes = arch.layer_sizes();
    int off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int rows = sizes[l + 1], cols = sizes[l];
      const double scale = std::sqrt(1.0 / cols);
      for (int i = 0; i < rows * cols; ++i) p[off + i] = scale * rng.gaussian();
      off += rows * cols;
      for (int i = 0; i < rows; ++i) p[off + i] = 0.0;
      off += rows;
    }
    return MlpScoreNet(std::move(arch), std::move(p));
  }

  const MlpArchitecture& architecture() const { return arch_; }
  const VectorXd& parameters() const { return params_; }

  int dim() const override { return arch_.input_dim; }

  VectorXd evaluate(double t, const VectorXd& x) const override {
    if (x.size() != arch_.input_dim) throw DimensionError("MlpScoreNet: x has wrong length");
    const auto sizes = arch_.layer_sizes();
    VectorXd h(sizes[0]);
    h.head(arch_.input_dim) = x;
    h.tail(arch_.time_embed_dim) = time_embedding(t, arch_.time_embed_dim);
    int off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int rows = sizes[l + 1], cols = sizes[l];
      const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          params_.data() + off, rows, cols);
      off += rows * cols;
      const auto b = Eigen::Map<const VectorXd>(params_.data() + off, rows);
      off += rows;
      h = W * h + b;
      if (l + 2 < sizes.size()) h = h.array().tanh();
    }
    return h;
  }

  void evaluate_batch(double t, const Eigen::Ref<const MatrixXd>& xs, Eigen::Ref<MatrixXd> out) const override {
    // The time embedding is shared across the batch, so its contribution to
    // the first layer is a constant per-unit offset.
    const auto sizes = arch_.layer_sizes();
    const VectorXd e = time_embedding(t, arch_.time_embed_dim);
    int off = 0;
    MatrixXd h;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int rows = sizes[l + 1], cols = sizes[l];
      const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          params_.data() + off, rows, cols);
      off += rows * cols;
      const auto b = Eigen::Map<const VectorXd>(params_.data() + off, rows);
      off += rows;
      if (l == 0) {
        const VectorXd offset = W.rightCols(arch_.time_embed_dim) * e + b;
        h = xs * W.leftCols(arch_.input_dim).transpose();
        h.rowwise() += offset.transpose();
      } else {
        h = (h * W.transpose()).rowwise() + b.transpose();
      }
      if (l + 2 < sizes.size()) h = h.array().tanh();
    }
    out = h;
  }

 private:
  MlpArchitecture arch_;
  VectorXd params_;
};

/// A training batch: one row per example.
struct NetBatch {
  VectorXd t;       // batch
  MatrixXd x;       // batch x d
  MatrixXd target;  // batch x d
};

namespace detail {

struct MlpForwardState {
  MatrixXd z0;                     // batch x (d + emb)
  std::vector<MatrixXd> post_act;  // activations after each hidden layer
  MatrixXd out;
};

inline MlpForwardState mlp_forward(const MlpArchitecture& arch, const VectorXd& params, const NetBatch& batch) {
  const auto sizes = arch.layer_sizes();
  const Eigen::Index B = batch.x.rows();
  MlpForwardState st;
  st.z0.resize(B, sizes[0]);
  st.z0.leftCols(arch.input_dim) = batch.x;
  for (Eigen::Index r = 0; r < B; ++r)
    st.z0.row(r).tail(arch.time_embed_dim) = time_embedding(batch.t[r], arch.time_embed_dim).transpose();

  MatrixXd h = st.z0;
  int off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        params.data() + off, rows, cols);
    off += rows * cols;
    const auto b = Eigen::Map<const VectorXd>(params.data() + off, rows);
    off += rows;
    h = (h * W.transpose()).rowwise() + b.transpose();
    if (l + 2 < sizes.size()) {
      h = h.array().tanh();
      st.post_act.push_back(h);
    }
  }
  st.out = h;
  return st;
}

}  // namespace detail

/// Mean squared error (1/B) sum_i ||net(t_i, x_i) - target_i||^2.
inline double net_batch_loss(const MlpScoreNet& net, const NetBatch& batch) {
  const auto st = detail::mlp_forward(net.architecture(), net.parameters(), batch);
  return (st.out - batch.target).squaredNorm() / static_cast<double>(batch.x.rows());
}

/// Gradient of net_batch_loss with respect to the flat parameter vector, by
/// manual backpropagation through the tanh layers.
inline VectorXd net_gradients(const MlpScoreNet& net, const NetBatch& batch) {
  if (batch.x.rows() == 0) throw InvariantError("net_gradients: batch is empty");
  const MlpArchitecture& arch = net.architecture();
  const auto sizes = arch.layer_sizes();
  const Eigen::Index B = batch.x.rows();
  const auto st = detail::mlp_forward(arch, net.parameters(), batch);

  const std::size_t n_layers = sizes.size() - 1;
  std::vector<int> w_offsets(n_layers), b_offsets(n_layers);
  int off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    w_offsets[l] = off;
    off += sizes[l + 1] * sizes[l];
    b_offsets[l] = off;
    off += sizes[l + 1];
  }

  VectorXd grad = VectorXd::Zero(net.parameters().size());
  MatrixXd delta = 2.0 / static_cast<double>(B) * (st.out - batch.target);  // B x out
  for (std::size_t l = n_layers; l-- > 0;) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const MatrixXd& input = (l == 0) ? st.z0 : st.post_act[l - 1];
    auto GW = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        grad.data() + w_offsets[l], rows, cols);
    GW = delta.transpose() * input;
    Eigen::Map<VectorXd>(grad.data() + b_offsets[l], rows) = delta.colwise().sum().transpose();
    if (l > 0) {
      const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          net.parameters().data() + w_offsets[l], rows, cols);
      delta = (delta * W).array() * (1.0 - st.post_act[l - 1].array().square());
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Denoising score-matching training
// ---------------------------------------------------------------------------

struct DsmTrainConfig {
  int epochs = 300;
  int batch = 64;
  double lr = 1e-3;  // Adam step size
  double t_min = 0.005;
  double val_frac = 0.1;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct DsmTrainResult {
  MlpScoreNet net;  // best-validation parameters
  std::vector<double> train_curve;  // loss on a fixed probe pair set, per epoch
  std::vector<double> val_curve;
  int best_epoch = -1;
  bool diverged = false;
};

/// Train the network on the denoising loss: t ~ U[t_min, T], x_t from the
/// forward kernel, target the conditional score. Adam updates; the held-out
/// split tracks validation loss on a fixed replicated pair set and the best
/// epoch's parameters are returned. The reported training curve is evaluated
/// on a fixed probe pair set so it tracks optimization progress rather than
/// the per-epoch draw noise. Deterministic given the stream.
inline DsmTrainResult dsm_train(const MlpScoreNet& init, const SampleSet& data, const OuSchedule& s,
                                const DsmTrainConfig& cfg, RngStream& rng) {
  if (data.size() == 0) throw InvariantError("dsm_train: data is empty");
  if (data.dim != init.dim()) throw DimensionError("dsm_train: data dim does not match the net");
  if (!(cfg.t_min > 0.0 && cfg.t_min < s.horizon_T)) throw InvariantError("dsm_train: t_min out of range");
  if (!(cfg.val_frac >= 0.0 && cfg.val_frac < 1.0)) throw InvariantError("dsm_train: val_frac out of range");
  const MlpArchitecture& arch = init.architecture();
  const int d = arch.input_dim;
  const Eigen::Index n = data.size();

  // Deterministic split: shuffle indices, last val_frac of them are held out.
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  RngStream split_stream = rng.substream(0);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[split_stream.below(i)]);
  Eigen::Index n_val = static_cast<Eigen::Index>(std::llround(cfg.val_frac * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  const Eigen::Index n_train = n - n_val;

  // Fixed validation pairs so best-epoch selection is not noise-driven.
  constexpr int kValReplicates = 4;
  NetBatch val;
  if (n_val > 0) {
    RngStream val_stream = rng.substream(1);
    const Eigen::Index rows = n_val * kValReplicates;
    val.t.resize(rows);
    val.x.resize(rows, d);
    val.target.resize(rows, d);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n_val; ++i) {
      const VectorXd x0 = data.row(perm[static_cast<std::size_t>(n_train + i)]);
      for (int rep = 0; rep < kValReplicates; ++rep, ++r) {
        const double t = cfg.t_min + (s.horizon_T - cfg.t_min) * val_stream.uniform();
        val.t[r] = t;
        val.x.row(r) = forward_sample(x0, s, t, val_stream).transpose();
        val.target.row(r) = conditional_score(val.x.row(r).transpose(), x0, s, t).transpose();
      }
    }
  }

  std::vector<Eigen::Index> train_idx(perm.begin(), perm.begin() + n_train);

  // Fixed probe pairs over the training split for the reported loss curve.
  NetBatch probe;
  {
    RngStream probe_stream = rng.substream(2);
    const Eigen::Index rows = std::min<Eigen::Index>(4096, 2 * n_train);
    probe.t.resize(rows);
    probe.x.resize(rows, d);
    probe.target.resize(rows, d);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const VectorXd x0 = data.row(train_idx[static_cast<std::size_t>(r % n_train)]);
      const double t = cfg.t_min + (s.horizon_T - cfg.t_min) * probe_stream.uniform();
      probe.t[r] = t;
      probe.x.row(r) = forward_sample(x0, s, t, probe_stream).transpose();
      probe.target.row(r) = conditional_score(probe.x.row(r).transpose(), x0, s, t).transpose();
    }
  }

  VectorXd params = init.parameters();
  VectorXd m = VectorXd::Zero(params.size());
  VectorXd v = VectorXd::Zero(params.size());
  long step_count = 0;

  DsmTrainResult result{init, {}, {}, -1, false};
  double best_val = std::numeric_limits<double>::infinity();
  VectorXd best_params = params;

  NetBatch batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream epoch_stream = rng.substream(100 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = train_idx.size(); i > 1; --i) std::swap(train_idx[i - 1], train_idx[epoch_stream.below(i)]);

    for (Eigen::Index start = 0; start < n_train; start += cfg.batch) {
      const Eigen::Index rows = std::min<Eigen::Index>(cfg.batch, n_train - start);
      batch.t.resize(rows);
      batch.x.resize(rows, d);
      batch.target.resize(rows, d);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const VectorXd x0 = data.row(train_idx[static_cast<std::size_t>(start + r)]);
        const double t = cfg.t_min + (s.horizon_T - cfg.t_min) * epoch_stream.uniform();
        batch.t[r] = t;
        batch.x.row(r) = forward_sample(x0, s, t, epoch_stream).transpose();
        batch.target.row(r) = conditional_score(batch.x.row(r).transpose(), x0, s, t).transpose();
      }
      MlpScoreNet current(arch, params);
      const double loss = net_batch_loss(current, batch);
      const VectorXd grad = net_gradients(current, batch);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        result.diverged = true;
        result.train_curve.push_back(loss);
        result.net = MlpScoreNet(arch, best_params);
        return result;
      }

      ++step_count;
      m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
      v = cfg.adam_beta2 * v.array().matrix() + (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
      const double mc = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step_count));
      const double vc = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step_count));
      params.array() -= cfg.lr * (m.array() / mc) / ((v.array() / vc).sqrt() + cfg.adam_eps);
    }
    result.train_curve.push_back(net_batch_loss(MlpScoreNet(arch, params), probe));

    if (n_val > 0) {
      const double val_loss = net_batch_loss(MlpScoreNet(arch, params), val);
      result.val_curve.push_back(val_loss);
      if (val_loss < best_val) {
        best_val = val_loss;
        best_params = params;
        result.best_epoch = epoch;
      }
    } else {
      best_params = params;
      result.best_epoch = epoch;
    }
  }
  result.net = MlpScoreNet(arch, best_params);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json net_to_json(const MlpScoreNet& net) {
  const auto& a = net.architecture();
  return nlohmann::json{
      {"schema_version", 1},
      {"kind", "mlp"},
      {"arch", {{"input_dim", a.input_dim}, {"time_embed_dim", a.time_embed_dim}, {"hidden", a.hidden}}},
      {"params", std::vector<double>(net.parameters().data(), net.parameters().data() + net.parameters().size())}};
}

inline MlpScoreNet net_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema_version", -1) != 1 || j.value("kind", "") != "mlp")
    throw SchemaError("MlpScoreNet: not a version-1 mlp checkpoint");
  MlpArchitecture a;
  a.input_dim = j.at("arch").at("input_dim").get<int>();
  a.time_embed_dim = j.at("arch").at("time_embed_dim").get<int>();
  a.hidden = j.at("arch").at("hidden").get<std::vector<int>>();
  const auto p = j.at("params").get<std::vector<double>>();
  return MlpScoreNet(a, Eigen::Map<const VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
}

}  // namespace scorefusion
