#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scorefusion/experiment.hpp"

namespace scorefusion {

// Subcommand front end. Every subcommand takes --config PATH --seed N --out DIR;
// --seed and --out override the corresponding config fields. Exit codes:
// 0 success, 1 partial failure (flagged cells or runtime error), 2 config error.

namespace cli_detail {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

inline void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to the JSON config")->required();
  cmd->add_option("--seed", args.seed, "Seed override");
  cmd->add_option("--out", args.out_dir, "Output directory override");
}

struct LoadedConfig {
  nlohmann::json raw;
  ExperimentConfig cfg;
  std::uint64_t seed = 0;
};

inline LoadedConfig load(const CommonArgs& args) {
  LoadedConfig lc;
  std::ifstream in(args.config_path);
  if (!in) throw ConfigError("cannot open config: " + args.config_path);
  try {
    lc.raw = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  lc.cfg = config_from_json(lc.raw);
  if (args.seed) lc.cfg.seeds = {*args.seed};
  if (args.out_dir) lc.cfg.out_dir = *args.out_dir;
  lc.seed = lc.cfg.seeds.front();
  std::filesystem::create_directories(lc.cfg.out_dir);
  return lc;
}

inline nlohmann::json section(const nlohmann::json& raw, const char* key) {
  return raw.contains(key) ? raw.at(key) : nlohmann::json::object();
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline SampleSet draw_target(const LoadedConfig& lc, Eigen::Index n, std::uint64_t tag) {
  std::vector<GaussianMixture> aux_mixtures;
  for (const auto& a : lc.cfg.auxiliaries)
    if (a.kind == "mixture") aux_mixtures.push_back(*a.mixture);
  const TargetSampler target(lc.cfg, aux_mixtures);
  RngStream stream = RngStream(lc.seed).substream(tag);
  return target.draw(n, stream);
}

inline std::vector<std::shared_ptr<const ScoreField>> aux_fields(const LoadedConfig& lc) {
  std::vector<std::shared_ptr<const ScoreField>> fields;
  for (const auto& a : lc.cfg.auxiliaries) {
    if (a.kind == "mixture")
      fields.push_back(analytic_score(*a.mixture, lc.cfg.schedule));
    else
      fields.push_back(load_field(a.path, lc.cfg.dim));
  }
  return fields;
}

inline int run_train_aux(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "train_aux");
  const int index = detail::get_or(sec, "aux_index", 0);
  if (index < 0 || index >= static_cast<int>(lc.cfg.auxiliaries.size()))
    throw ConfigError("train-aux: aux_index out of range");
  const auto& spec = lc.cfg.auxiliaries[static_cast<std::size_t>(index)];
  if (spec.kind != "mixture") throw ConfigError("train-aux: auxiliary must be an analytic mixture");
  const Eigen::Index n = detail::get_or<long long>(sec, "n_samples", 20000);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "aux_" + std::to_string(index) + ".json");

  RngStream root(lc.seed);
  RngStream data_stream = root.substream(detail::kTagData).substream(static_cast<std::uint64_t>(index));
  const SampleSet data = mixture_sample(*spec.mixture, n, data_stream);
  MlpArchitecture arch = lc.cfg.baseline.arch;
  arch.input_dim = lc.cfg.dim;
  RngStream init_stream = root.substream(detail::kTagTrain).substream(static_cast<std::uint64_t>(index)).substream(0);
  RngStream fit_stream = root.substream(detail::kTagTrain).substream(static_cast<std::uint64_t>(index)).substream(1);
  const MlpScoreNet init = MlpScoreNet::random_init(arch, init_stream);
  const DsmTrainResult r = dsm_train(init, data, lc.cfg.schedule, lc.cfg.baseline.train, fit_stream);
  if (r.diverged) throw std::runtime_error("train-aux: training diverged");
  save_field(lc.cfg.out_dir + "/" + out_name, r.net);
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

inline int run_train_baseline(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "train_baseline");
  const Eigen::Index n = detail::get_or<long long>(sec, "n_samples", 64);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "baseline.json");
  const SampleSet data = draw_target(lc, n, detail::kTagData);
  MlpArchitecture arch = lc.cfg.baseline.arch;
  arch.input_dim = lc.cfg.dim;
  RngStream root(lc.seed);
  RngStream init_stream = root.substream(detail::kTagTrain).substream(0);
  RngStream fit_stream = root.substream(detail::kTagTrain).substream(1);
  const MlpScoreNet init = MlpScoreNet::random_init(arch, init_stream);
  const DsmTrainResult r = dsm_train(init, data, lc.cfg.schedule, lc.cfg.baseline.train, fit_stream);
  if (r.diverged) throw std::runtime_error("train-baseline: training diverged");
  save_field(lc.cfg.out_dir + "/" + out_name, r.net);
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

inline int run_fuse_score(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "fuse");
  const Eigen::Index n = detail::get_or<long long>(sec, "n_data", 64);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "weights_score.json");
  const std::string quad_name = detail::get_or<std::string>(sec, "quadratic_name", "quadratic.json");
  const SampleSet data = draw_target(lc, n, detail::kTagData);
  const auto fields = aux_fields(lc);
  RngStream train_stream = RngStream(lc.seed).substream(detail::kTagTrain);
  SimplexWeights weights = SimplexWeights::uniform(static_cast<int>(fields.size()));
  const FusionQuadratic q = assemble_quadratic(fields, data, lc.cfg.schedule, lc.cfg.fusion, train_stream);
  if (lc.cfg.fusion_use_sgd) {
    const SgdResult r = sgd_train(fields, data, lc.cfg.schedule, lc.cfg.fusion, train_stream);
    if (r.diverged) throw std::runtime_error("fuse-score: sgd diverged");
    weights = r.weights;
  } else {
    weights = solve_simplex_quadratic(q).weights;
  }
  write_json(lc.cfg.out_dir + "/" + out_name, weights_to_json(weights));
  write_json(lc.cfg.out_dir + "/" + quad_name, quadratic_to_json(q));
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

inline int run_fuse_vanilla(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "fuse");
  const Eigen::Index n = detail::get_or<long long>(sec, "n_data", 64);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "weights_vanilla.json");
  const std::string trace_name = detail::get_or<std::string>(sec, "trace_name", "trace.csv");
  std::vector<GaussianMixture> aux_mixtures;
  for (const auto& a : lc.cfg.auxiliaries) {
    if (a.kind != "mixture") throw ConfigError("fuse-vanilla: auxiliaries must be analytic mixtures");
    aux_mixtures.push_back(*a.mixture);
  }
  const SampleSet data = draw_target(lc, n, detail::kTagData);
  const Grid g = Grid::cover(aux_mixtures, lc.cfg.vanilla.grid_points);
  const VanillaFusionResult r = run_vanilla_fusion(data, aux_mixtures, lc.cfg.schedule, g, lc.cfg.vanilla.tau_max);
  write_json(lc.cfg.out_dir + "/" + out_name, weights_to_json(r.weights));
  write_trace_csv(lc.cfg.out_dir + "/" + trace_name, r.trace);
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

inline int run_sample(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "sample");
  const Eigen::Index n = detail::get_or<long long>(sec, "n", 8096);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "samples.csv");

  std::vector<std::shared_ptr<const ScoreField>> fields;
  if (sec.contains("fields")) {
    for (const auto& p : sec.at("fields").get<std::vector<std::string>>())
      fields.push_back(load_field(p, lc.cfg.dim));
  } else {
    fields = aux_fields(lc);
  }
  if (fields.empty()) throw ConfigError("sample: no score fields configured");

  std::shared_ptr<const ScoreField> model;
  if (sec.contains("weights")) {
    std::ifstream win(sec.at("weights").get<std::string>());
    if (!win) throw ConfigError("sample: cannot open weights file");
    model = fused_score(fields, weights_from_json(nlohmann::json::parse(win)));
  } else if (fields.size() == 1) {
    model = fields.front();
  } else {
    throw ConfigError("sample: multiple fields need a weights file");
  }

  ReverseConfig rc;
  rc.schedule = lc.cfg.schedule;
  rc.integrator = lc.cfg.integrator;
  rc.n_samples = n;
  rc.seed = RngStream(lc.seed).substream(detail::kTagGenerate).id();
  const SampleSet samples = reverse_sample(*model, rc, lc.cfg.threads);
  write_samples_csv(lc.cfg.out_dir + "/" + out_name, samples);
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

inline int run_evaluate(const LoadedConfig& lc) {
  const auto sec = section(lc.raw, "evaluate");
  if (!sec.contains("samples_csv")) throw ConfigError("evaluate: samples_csv is required");
  const SampleSet samples = read_samples_csv(sec.at("samples_csv").get<std::string>());
  const int repeats = detail::get_or(sec, "repeats", 10);
  const std::string out_name = detail::get_or<std::string>(sec, "out_name", "metrics.json");
  VectorXd w1s(repeats);
  for (int rep = 0; rep < repeats; ++rep) {
    const SampleSet truth = draw_target(lc, samples.size(), detail::kTagTruth * 1000 + static_cast<std::uint64_t>(rep));
    w1s[rep] = wasserstein1_1d(samples, truth);
  }
  const double mean = w1s.mean();
  const double var = repeats > 1 ? (w1s.array() - mean).square().sum() / (repeats - 1) : 0.0;
  write_json(lc.cfg.out_dir + "/" + out_name,
             nlohmann::json{{"w1_mean", mean},
                            {"w1_stderr", std::sqrt(var / repeats)},
                            {"n_samples", static_cast<long long>(samples.size())},
                            {"repeats", repeats}});
  std::cout << "wrote " << lc.cfg.out_dir << "/" << out_name << "\n";
  return 0;
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"KL-barycenter fusion of score-based generative models"};
  app.require_subcommand(1);

  struct Bound {
    CLI::App* cmd;
    cli_detail::CommonArgs args;
    int (*fn)(const cli_detail::LoadedConfig&);
  };
  std::vector<std::unique_ptr<Bound>> bound;
  const auto add = [&](const std::string& name, const std::string& desc,
                       int (*fn)(const cli_detail::LoadedConfig&)) {
    auto b = std::make_unique<Bound>();
    b->cmd = app.add_subcommand(name, desc);
    b->fn = fn;
    cli_detail::add_common(b->cmd, b->args);
    bound.push_back(std::move(b));
  };

  add("experiment", "Run the configured method/size/seed sweep and write report.json",
      [](const cli_detail::LoadedConfig& lc) { return run_experiment(lc.cfg).any_failed ? 1 : 0; });
  add("train-aux", "Train an MLP score model for one auxiliary mixture", cli_detail::run_train_aux);
  add("train-baseline", "Train the from-scratch MLP baseline on target data", cli_detail::run_train_baseline);
  add("fuse-score", "Learn fusion weights by truncated score matching", cli_detail::run_fuse_score);
  add("fuse-vanilla", "Learn fusion weights by the distribution-level objective", cli_detail::run_fuse_vanilla);
  add("sample", "Generate samples from a stored or fused score field", cli_detail::run_sample);
  add("evaluate", "Compare a sample CSV against fresh ground-truth draws", cli_detail::run_evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const auto& b : bound)
      if (b->cmd->parsed()) return b->fn(cli_detail::load(b->args));
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scorefusion
