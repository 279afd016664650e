#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scorefusion/barycenter.hpp"
#include "scorefusion/core.hpp"
#include "scorefusion/csv.hpp"
#include "scorefusion/metrics.hpp"
#include "scorefusion/ou.hpp"
#include "scorefusion/sampler.hpp"
#include "scorefusion/score_fusion.hpp"
#include "scorefusion/score_net.hpp"
#include "scorefusion/vanilla_fusion.hpp"

namespace scorefusion {

/// Invalid configuration document (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kReportSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Score field persistence
// ---------------------------------------------------------------------------

inline nlohmann::json schedule_to_json(const OuSchedule& s) {
  return nlohmann::json{{"a", s.a}, {"sigma", s.sigma}, {"horizon_T", s.horizon_T}, {"steps_N", s.steps_N}};
}

inline OuSchedule schedule_from_json(const nlohmann::json& j) {
  return OuSchedule(j.at("a").get<double>(), j.at("sigma").get<double>(), j.at("horizon_T").get<double>(),
                    j.at("steps_N").get<int>());
}

/// Serialize an analytic-mixture or MLP score field. Round-trips are
/// bit-exact: doubles are emitted with shortest round-trip formatting.
inline void save_field(const std::string& path, const ScoreField& field) {
  nlohmann::json doc;
  if (const auto* analytic = dynamic_cast<const AnalyticMixtureScore*>(&field)) {
    doc = nlohmann::json{{"schema_version", 1},
                         {"kind", "analytic_mixture"},
                         {"dim", analytic->dim()},
                         {"schedule", schedule_to_json(analytic->schedule())},
                         {"mixture", to_json(analytic->mixture())}};
  } else if (const auto* net = dynamic_cast<const MlpScoreNet*>(&field)) {
    doc = net_to_json(*net);
  } else {
    throw SchemaError("save_field: only analytic-mixture and mlp fields are persistable");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

inline std::shared_ptr<const ScoreField> load_field(const std::string& path, int expected_dim = -1) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.value("schema_version", -1) != 1) throw SchemaError("load_field: unknown schema version in " + path);
  const std::string kind = doc.value("kind", "");
  std::shared_ptr<const ScoreField> field;
  if (kind == "analytic_mixture") {
    field = analytic_score(mixture_from_json(doc.at("mixture")), schedule_from_json(doc.at("schedule")));
  } else if (kind == "mlp") {
    field = std::make_shared<MlpScoreNet>(net_from_json(doc));
  } else {
    throw SchemaError("load_field: unknown kind '" + kind + "' in " + path);
  }
  if (expected_dim >= 0 && field->dim() != expected_dim)
    throw DimensionError("load_field: " + path + " has dim " + std::to_string(field->dim()) + ", expected " +
                         std::to_string(expected_dim));
  return field;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct TargetSpec {
  std::string kind;  // "mixture" | "barycenter"
  std::optional<GaussianMixture> mixture;
  std::optional<SimplexWeights> lambda_true;  // barycenter of the auxiliaries
};

struct AuxSpec {
  std::string kind;  // "mixture" | "checkpoint"
  std::optional<GaussianMixture> mixture;
  std::string path;
};

struct VanillaConfig {
  int grid_points = 4096;
  int tau_max = 500;
};

struct BaselineConfig {
  MlpArchitecture arch;
  DsmTrainConfig train;
};

struct ExperimentConfig {
  int dim = 1;
  TargetSpec target;
  std::vector<AuxSpec> auxiliaries;
  OuSchedule schedule;
  FusionTrainConfig fusion;
  bool fusion_use_sgd = false;
  VanillaConfig vanilla;
  BaselineConfig baseline;
  std::vector<std::string> methods;  // subset of {"scorefusion", "vanilla", "baseline"}
  std::vector<Eigen::Index> train_sizes;
  Eigen::Index eval_samples = 8096;
  int eval_repeats = 10;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  Integrator integrator = Integrator::exponential;
  int threads = 0;

  void validate() const {
    if (dim < 1 || dim > 2) throw ConfigError("config: dim must be 1 or 2");
    if (methods.empty()) throw ConfigError("config: enable at least one method");
    const std::set<std::string> known{"scorefusion", "vanilla", "baseline"};
    for (const auto& m : methods)
      if (!known.count(m)) throw ConfigError("config: unknown method '" + m + "'");
    if (train_sizes.empty()) throw ConfigError("config: train_sizes must be nonempty");
    for (std::size_t i = 1; i < train_sizes.size(); ++i)
      if (train_sizes[i] <= train_sizes[i - 1]) throw ConfigError("config: train_sizes must be strictly increasing");
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (eval_samples < 2 || eval_repeats < 1) throw ConfigError("config: bad evaluation settings");
    if (target.kind == "barycenter") {
      if (!target.lambda_true) throw ConfigError("config: barycenter target needs lambda");
      if (target.lambda_true->k() != static_cast<int>(auxiliaries.size()))
        throw ConfigError("config: barycenter lambda length must match auxiliary count");
      for (const auto& a : auxiliaries)
        if (a.kind != "mixture")
          throw ConfigError("config: barycenter target requires analytic (mixture) auxiliaries");
    } else if (target.kind == "mixture") {
      if (!target.mixture) throw ConfigError("config: mixture target needs a mixture");
    } else {
      throw ConfigError("config: target.kind must be 'mixture' or 'barycenter'");
    }
    if (auxiliaries.empty() &&
        (std::count(methods.begin(), methods.end(), "scorefusion") || std::count(methods.begin(), methods.end(), "vanilla")))
      throw ConfigError("config: fusion methods need auxiliaries");
    fusion.validate(schedule);
  }
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

/// Parse and validate a config document. Throws ConfigError on any problem.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    cfg.dim = detail::get_or(j, "dim", 1);
    if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));

    const auto& tj = j.at("target");
    cfg.target.kind = tj.at("kind").get<std::string>();
    if (tj.contains("mixture")) cfg.target.mixture = mixture_from_json(tj.at("mixture"));
    if (tj.contains("lambda")) {
      const auto lam = tj.at("lambda").get<std::vector<double>>();
      cfg.target.lambda_true = SimplexWeights(Eigen::Map<const VectorXd>(lam.data(), static_cast<Eigen::Index>(lam.size())));
    }

    for (const auto& aj : detail::get_or(j, "auxiliaries", nlohmann::json::array())) {
      AuxSpec a;
      a.kind = aj.at("kind").get<std::string>();
      if (a.kind == "mixture")
        a.mixture = mixture_from_json(aj.at("mixture"));
      else if (a.kind == "checkpoint")
        a.path = aj.at("path").get<std::string>();
      else
        throw ConfigError("config: auxiliary kind must be 'mixture' or 'checkpoint'");
      cfg.auxiliaries.push_back(std::move(a));
    }

    cfg.fusion = FusionTrainConfig::defaults(cfg.schedule);
    if (j.contains("fusion")) {
      const auto& fj = j.at("fusion");
      cfg.fusion.T_tilde = detail::get_or(fj, "T_tilde", cfg.fusion.T_tilde);
      cfg.fusion.t_min = detail::get_or(fj, "t_min", cfg.fusion.t_min);
      cfg.fusion.n_mc = detail::get_or(fj, "n_mc", cfg.fusion.n_mc);
      cfg.fusion.batch = detail::get_or(fj, "batch", cfg.fusion.batch);
      cfg.fusion.lr = detail::get_or(fj, "lr", cfg.fusion.lr);
      cfg.fusion.max_epochs = detail::get_or(fj, "max_epochs", cfg.fusion.max_epochs);
      const std::string gamma = detail::get_or<std::string>(fj, "gamma_weighting", "uniform");
      if (gamma == "uniform")
        cfg.fusion.gamma_weighting = GammaWeighting::uniform;
      else if (gamma == "sigma_squared")
        cfg.fusion.gamma_weighting = GammaWeighting::sigma_squared;
      else
        throw ConfigError("config: gamma_weighting must be 'uniform' or 'sigma_squared'");
      cfg.fusion_use_sgd = detail::get_or(fj, "use_sgd", false);
    }

    if (j.contains("vanilla")) {
      cfg.vanilla.grid_points = detail::get_or(j.at("vanilla"), "grid_points", 4096);
      cfg.vanilla.tau_max = detail::get_or(j.at("vanilla"), "tau_max", 500);
    }

    cfg.baseline.arch.input_dim = cfg.dim;
    cfg.baseline.train.t_min = 1e-3 * cfg.schedule.horizon_T;
    cfg.baseline.train.val_frac = 0.2;  // 4:1 split for paper-parity runs
    if (j.contains("baseline")) {
      const auto& bj = j.at("baseline");
      cfg.baseline.train.epochs = detail::get_or(bj, "epochs", cfg.baseline.train.epochs);
      cfg.baseline.train.batch = detail::get_or(bj, "batch", cfg.baseline.train.batch);
      cfg.baseline.train.lr = detail::get_or(bj, "lr", cfg.baseline.train.lr);
      cfg.baseline.train.t_min = detail::get_or(bj, "t_min", cfg.baseline.train.t_min);
      cfg.baseline.train.val_frac = detail::get_or(bj, "val_frac", cfg.baseline.train.val_frac);
      cfg.baseline.arch.time_embed_dim = detail::get_or(bj, "time_embed_dim", 16);
      cfg.baseline.arch.hidden = detail::get_or(bj, "hidden", std::vector<int>{64, 64});
    }

    cfg.methods = detail::get_or(j, "methods", std::vector<std::string>{"scorefusion"});
    for (const auto sz : detail::get_or(j, "train_sizes", std::vector<long long>{64}))
      cfg.train_sizes.push_back(static_cast<Eigen::Index>(sz));
    cfg.eval_samples = detail::get_or<long long>(j, "eval_samples", 8096);
    cfg.eval_repeats = detail::get_or(j, "eval_repeats", 10);
    cfg.seeds = detail::get_or(j, "seeds", std::vector<std::uint64_t>{1});
    cfg.out_dir = detail::get_or<std::string>(j, "out_dir", "out");
    const std::string integ = detail::get_or<std::string>(j, "integrator", "exponential");
    if (integ == "exponential")
      cfg.integrator = Integrator::exponential;
    else if (integ == "euler_maruyama")
      cfg.integrator = Integrator::euler_maruyama;
    else
      throw ConfigError("config: integrator must be 'exponential' or 'euler_maruyama'");
    cfg.threads = detail::get_or(j, "threads", 0);

    cfg.validate();
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

/// Canonical echo of the parsed configuration (what the run actually used).
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["dim"] = cfg.dim;
  j["schedule"] = schedule_to_json(cfg.schedule);
  nlohmann::json tj{{"kind", cfg.target.kind}};
  if (cfg.target.mixture) tj["mixture"] = to_json(*cfg.target.mixture);
  if (cfg.target.lambda_true)
    tj["lambda"] = std::vector<double>(cfg.target.lambda_true->lambda().data(),
                                       cfg.target.lambda_true->lambda().data() + cfg.target.lambda_true->k());
  j["target"] = tj;
  nlohmann::json aj = nlohmann::json::array();
  for (const auto& a : cfg.auxiliaries) {
    nlohmann::json one{{"kind", a.kind}};
    if (a.mixture) one["mixture"] = to_json(*a.mixture);
    if (!a.path.empty()) one["path"] = a.path;
    aj.push_back(one);
  }
  j["auxiliaries"] = aj;
  j["fusion"] = {{"T_tilde", cfg.fusion.T_tilde},
                 {"t_min", cfg.fusion.t_min},
                 {"gamma_weighting", cfg.fusion.gamma_weighting == GammaWeighting::uniform ? "uniform" : "sigma_squared"},
                 {"n_mc", cfg.fusion.n_mc},
                 {"batch", cfg.fusion.batch},
                 {"lr", cfg.fusion.lr},
                 {"max_epochs", cfg.fusion.max_epochs},
                 {"use_sgd", cfg.fusion_use_sgd}};
  j["vanilla"] = {{"grid_points", cfg.vanilla.grid_points}, {"tau_max", cfg.vanilla.tau_max}};
  j["baseline"] = {{"epochs", cfg.baseline.train.epochs},
                   {"batch", cfg.baseline.train.batch},
                   {"lr", cfg.baseline.train.lr},
                   {"t_min", cfg.baseline.train.t_min},
                   {"val_frac", cfg.baseline.train.val_frac},
                   {"time_embed_dim", cfg.baseline.arch.time_embed_dim},
                   {"hidden", cfg.baseline.arch.hidden}};
  j["methods"] = cfg.methods;
  std::vector<long long> sizes(cfg.train_sizes.begin(), cfg.train_sizes.end());
  j["train_sizes"] = sizes;
  j["eval_samples"] = static_cast<long long>(cfg.eval_samples);
  j["eval_repeats"] = cfg.eval_repeats;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["integrator"] = cfg.integrator == Integrator::exponential ? "exponential" : "euler_maruyama";
  j["threads"] = cfg.threads;
  return j;
}

// ---------------------------------------------------------------------------
// Target realization
// ---------------------------------------------------------------------------

/// Draws ground-truth samples: directly for mixture targets, by grid
/// inverse-CDF for planted barycenter targets (4096-point grid over the
/// references' mean +/- 8 std box).
class TargetSampler {
 public:
  TargetSampler(const ExperimentConfig& cfg, const std::vector<GaussianMixture>& aux_mixtures) {
    if (cfg.target.kind == "mixture") {
      mixture_ = cfg.target.mixture;
      range_grid_ = Grid::cover({*mixture_}, 2);
    } else {
      std::vector<LogDensityFn> fns;
      for (const auto& m : aux_mixtures) fns.push_back(log_density_fn(m));
      const Grid g = Grid::cover(aux_mixtures, 4096);
      density_ = barycenter_density_grid(fns, *cfg.target.lambda_true, g);
      range_grid_ = g;
    }
  }

  SampleSet draw(Eigen::Index n, RngStream& rng) const {
    if (mixture_) return mixture_sample(*mixture_, n, rng);
    return sample_grid_density(*density_, n, rng);
  }

  /// Axis range of the target's effective support (for histogram export).
  std::pair<double, double> range() const {
    const auto& ax = range_grid_->axes().front();
    return {ax.lo, ax.hi};
  }

 private:
  std::optional<GaussianMixture> mixture_;
  std::optional<GridDensity> density_;
  std::optional<Grid> range_grid_;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ExperimentCell {
  std::string method;
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  std::optional<SimplexWeights> lambda;
  double w1_mean = 0.0;
  double w1_stderr = 0.0;
  double wall_clock_s = 0.0;
  std::string status = "ok";
  std::string error;
};

struct ExperimentReport {
  nlohmann::json document;
  bool any_failed = false;
};

inline nlohmann::json environment_fingerprint() {
  return nlohmann::json{{"compiler", __VERSION__},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
#ifdef NDEBUG
                        {"build", "Release"}
#else
                        {"build", "Debug"}
#endif
  };
}

/// Parse a persisted report, rejecting unknown schema versions.
inline nlohmann::json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("schema_version", -1) != kReportSchemaVersion)
    throw SchemaError("report: unknown schema version");
  return j;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

// Substream tags for the per-cell derivation scheme. Cells are independent by
// construction: data depends on (seed, size) so every method sees the same
// training set, while training and evaluation draws also key on the method.
enum StreamTag : std::uint64_t {
  kTagData = 1,
  kTagTrain = 2,
  kTagGenerate = 3,
  kTagTruth = 4,
};

inline RngStream cell_stream(std::uint64_t seed, StreamTag tag, std::size_t size_idx, std::size_t method_idx = 0) {
  return RngStream(seed).substream(tag).substream(size_idx).substream(method_idx);
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  // Realize the auxiliaries once: analytic mixtures or loaded checkpoints.
  std::vector<std::shared_ptr<const ScoreField>> aux_fields;
  std::vector<GaussianMixture> aux_mixtures;
  for (const auto& a : cfg.auxiliaries) {
    if (a.kind == "mixture") {
      aux_fields.push_back(analytic_score(*a.mixture, cfg.schedule));
      aux_mixtures.push_back(*a.mixture);
    } else {
      aux_fields.push_back(load_field(a.path, cfg.dim));
    }
  }
  const TargetSampler target(cfg, aux_mixtures);

  std::vector<ExperimentCell> cells;
  bool any_failed = false;

  for (std::size_t size_idx = 0; size_idx < cfg.train_sizes.size(); ++size_idx) {
    const Eigen::Index n = cfg.train_sizes[size_idx];
    for (const std::uint64_t seed : cfg.seeds) {
      RngStream data_stream = detail::cell_stream(seed, detail::kTagData, size_idx);
      const SampleSet data = target.draw(n, data_stream);

      for (std::size_t method_idx = 0; method_idx < cfg.methods.size(); ++method_idx) {
        const std::string& method = cfg.methods[method_idx];
        ExperimentCell cell;
        cell.method = method;
        cell.n = n;
        cell.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          RngStream train_stream = detail::cell_stream(seed, detail::kTagTrain, size_idx, method_idx);
          std::shared_ptr<const ScoreField> model;

          if (method == "scorefusion") {
            if (cfg.fusion_use_sgd) {
              const SgdResult r = sgd_train(aux_fields, data, cfg.schedule, cfg.fusion, train_stream);
              if (r.diverged) throw std::runtime_error("scorefusion sgd diverged");
              cell.lambda = r.weights;
            } else {
              const FusionQuadratic q = assemble_quadratic(aux_fields, data, cfg.schedule, cfg.fusion, train_stream);
              cell.lambda = solve_simplex_quadratic(q).weights;
            }
            model = fused_score(aux_fields, *cell.lambda);
          } else if (method == "vanilla") {
            if (aux_mixtures.size() != cfg.auxiliaries.size())
              throw std::runtime_error("vanilla fusion requires analytic auxiliaries");
            const Grid g = Grid::cover(aux_mixtures, cfg.vanilla.grid_points);
            VanillaFusionResult r = run_vanilla_fusion(data, aux_mixtures, cfg.schedule, g, cfg.vanilla.tau_max);
            cell.lambda = r.weights;
            model = r.fused;
          } else {  // baseline
            RngStream init_stream = train_stream.substream(0);
            RngStream fit_stream = train_stream.substream(1);
            MlpArchitecture arch = cfg.baseline.arch;
            arch.input_dim = cfg.dim;
            const MlpScoreNet init = MlpScoreNet::random_init(arch, init_stream);
            DsmTrainResult r = dsm_train(init, data, cfg.schedule, cfg.baseline.train, fit_stream);
            if (r.diverged) throw std::runtime_error("baseline training diverged");
            model = std::make_shared<MlpScoreNet>(r.net);
          }

          // Table-style evaluation: W1 between fresh generator and ground
          // truth draws, repeated for a standard error.
          VectorXd w1s(cfg.eval_repeats);
          SampleSet first_draw;
          for (int rep = 0; rep < cfg.eval_repeats; ++rep) {
            ReverseConfig rc;
            rc.schedule = cfg.schedule;
            rc.integrator = cfg.integrator;
            rc.n_samples = cfg.eval_samples;
            rc.seed = detail::cell_stream(seed, detail::kTagGenerate, size_idx, method_idx)
                          .substream(static_cast<std::uint64_t>(rep))
                          .id();
            SampleSet gen = reverse_sample(*model, rc, cfg.threads);
            RngStream truth_stream = detail::cell_stream(seed, detail::kTagTruth, size_idx, method_idx)
                                         .substream(static_cast<std::uint64_t>(rep));
            const SampleSet truth = target.draw(cfg.eval_samples, truth_stream);
            w1s[rep] = wasserstein1_1d(gen, truth);
            if (rep == 0) first_draw = std::move(gen);
          }
          cell.w1_mean = w1s.mean();
          const double var = cfg.eval_repeats > 1
                                 ? (w1s.array() - cell.w1_mean).square().sum() / (cfg.eval_repeats - 1)
                                 : 0.0;
          cell.w1_stderr = std::sqrt(var / cfg.eval_repeats);

          const auto [lo, hi] = target.range();
          const Histogram h = histogram(first_draw, 64, lo, hi);
          write_histogram_csv(cfg.out_dir + "/hist_" + method + "_" + std::to_string(n) + "_" + std::to_string(seed) +
                                  ".csv",
                              h);
        } catch (const std::exception& e) {
          cell.status = "failed";
          cell.error = e.what();
          any_failed = true;
        }
        cell.wall_clock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cells.push_back(std::move(cell));
      }
    }
  }

  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cj{{"method", c.method}, {"n", static_cast<long long>(c.n)},   {"seed", c.seed},
                      {"status", c.status}, {"wall_clock_s", c.wall_clock_s}};
    if (c.lambda)
      cj["lambda"] = std::vector<double>(c.lambda->lambda().data(), c.lambda->lambda().data() + c.lambda->k());
    if (c.status == "ok") {
      cj["w1_mean"] = c.w1_mean;
      cj["w1_stderr"] = c.w1_stderr;
    } else {
      cj["error"] = c.error;
    }
    cells_json.push_back(std::move(cj));
  }

  const auto now = std::chrono::system_clock::now().time_since_epoch();
  ExperimentReport report;
  report.document = nlohmann::json{{"schema_version", kReportSchemaVersion},
                                   {"config", config_to_json(cfg)},
                                   {"environment", environment_fingerprint()},
                                   {"cells", cells_json},
                                   {"created_at_unix_ms",
                                    std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
  report.any_failed = any_failed;

  std::ofstream out(cfg.out_dir + "/report.json");
  if (!out) throw std::runtime_error("cannot write report to " + cfg.out_dir);
  out << report.document.dump(2) << "\n";
  return report;
}

/// Strip volatile fields (timestamps, wall clocks) for reproducibility checks.
inline nlohmann::json report_stable_view(nlohmann::json doc) {
  doc.erase("created_at_unix_ms");
  if (doc.contains("cells"))
    for (auto& c : doc["cells"]) c.erase("wall_clock_s");
  return doc;
}

}  // namespace scorefusion
