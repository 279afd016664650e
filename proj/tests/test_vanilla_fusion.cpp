#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "scorefusion/vanilla_fusion.hpp"

using namespace scorefusion;
using testutil::mixture1d;
using testutil::random_mixture;

namespace {

/// Grid search over the 2-simplex at the given resolution.
SimplexWeights grid_argmin_2(const std::function<double(const SimplexWeights&)>& f, double resolution) {
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (double t = 0.0; t <= 1.0 + 1e-12; t += resolution) {
    const double tt = std::min(t, 1.0);
    const double v = f(SimplexWeights(Eigen::Vector2d(tt, 1.0 - tt)));
    if (v < best) {
      best = v;
      best_t = tt;
    }
  }
  return SimplexWeights(Eigen::Vector2d(best_t, 1.0 - best_t));
}

}  // namespace

TEST_CASE("vf_objective with one reference is the negative average log likelihood") {
  RngStream rng(1);
  const auto m = random_mixture(1, 2, rng);
  const SampleSet target = mixture_sample(m, 500, rng);
  const Grid g = Grid::cover({m}, 2048);
  const double f = vf_objective(SimplexWeights::unit(1, 0), target, {log_density_fn(m)}, g);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) nll -= mixture_log_density(m, target.row(i));
  nll /= static_cast<double>(target.size());
  CHECK(f == Catch::Approx(nll).margin(1e-8));
}

TEST_CASE("vf_objective prefers the generating reference") {
  RngStream rng(2);
  const auto p1 = GaussianMixture::gaussian1d(0.0, 1.0);
  const auto p2 = GaussianMixture::gaussian1d(8.0, 1.0);
  const SampleSet target = mixture_sample(p1, 2000, rng);
  const Grid g = Grid::cover({p1, p2}, 4096);
  const std::vector<LogDensityFn> refs{log_density_fn(p1), log_density_fn(p2)};
  CHECK(vf_objective(SimplexWeights::unit(2, 0), target, refs, g) <
        vf_objective(SimplexWeights::unit(2, 1), target, refs, g));
}

TEST_CASE("vf_objective is midpoint convex") {
  RngStream rng(3);
  const auto m1 = random_mixture(1, 2, rng);
  const auto m2 = random_mixture(1, 2, rng);
  const auto m3 = random_mixture(1, 3, rng);
  const SampleSet target = mixture_sample(m1, 300, rng);
  const Grid g = Grid::cover({m1, m2, m3}, 2048);
  const VanillaObjective problem(target, {log_density_fn(m1), log_density_fn(m2), log_density_fn(m3)}, g);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = 0.05 + rng.uniform();
      b[i] = 0.05 + rng.uniform();
    }
    a /= a.sum();
    b /= b.sum();
    const double mid = problem.objective(SimplexWeights((a + b) / 2.0));
    const double avg = 0.5 * problem.objective(SimplexWeights(a)) + 0.5 * problem.objective(SimplexWeights(b));
    CHECK(mid <= avg + 1e-8);
  }
}

TEST_CASE("vf_objective flags samples outside machine support") {
  RngStream rng(4);
  const auto m = GaussianMixture::gaussian1d(0.0, 1.0);
  SampleSet target = mixture_sample(m, 10, rng);
  target.data(3, 0) = 1e200;  // squared residual overflows, log density is -inf
  const Grid g = Grid::cover({m}, 1024);
  try {
    vf_objective(SimplexWeights::unit(1, 0), target, {log_density_fn(m)}, g);
    FAIL("expected FlaggedSampleError");
  } catch (const FlaggedSampleError& e) {
    REQUIRE(e.sample_indices.size() == 1);
    CHECK(e.sample_indices[0] == 3);
  }
}

TEST_CASE("vf_gradient matches finite differences along simplex tangents") {
  const auto p1 = testutil::canonical_aux1();
  const auto p2 = testutil::canonical_aux2();
  const auto target_density = testutil::canonical_target_density(SimplexWeights(Eigen::Vector2d(0.6, 0.4)));
  RngStream draw(6);
  const SampleSet target = sample_grid_density(target_density, 2000, draw);
  const Grid g = Grid::cover({p1, p2}, 4096);
  const VanillaObjective problem(target, {log_density_fn(p1), log_density_fn(p2)}, g);

  const double eps = 1e-4;
  for (const auto& lam : {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.2, 0.8), Eigen::Vector2d(0.85, 0.15)}) {
    const VectorXd grad = problem.gradient(SimplexWeights(lam));
    const Eigen::Vector2d dir(1.0, -1.0);  // e_1 - e_2
    const double plus = problem.objective(SimplexWeights(lam + eps * dir));
    const double minus = problem.objective(SimplexWeights(lam - eps * dir));
    const double fd = (plus - minus) / (2.0 * eps);
    const double an = grad[0] - grad[1];
    CHECK(testutil::rel_err(an, fd) < 1e-3);
  }
}

TEST_CASE("vf_gradient is symmetric for mirror references and symmetric data") {
  const auto left = GaussianMixture::gaussian1d(-1.0, 1.0);
  const auto right = GaussianMixture::gaussian1d(1.0, 1.0);
  RngStream rng(7);
  MatrixXd data(200, 1);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double x = rng.gaussian();
    data(2 * i, 0) = x;
    data(2 * i + 1, 0) = -x;
  }
  const SampleSet target(1, std::move(data), "symmetric", 7);
  const Grid g = Grid::uniform1d(-9.0, 9.0, 4097);
  const VanillaObjective problem(target, {log_density_fn(left), log_density_fn(right)}, g);
  const VectorXd grad = problem.gradient(SimplexWeights(Eigen::Vector2d(0.5, 0.5)));
  CHECK(std::abs(grad[0] - grad[1]) < 1e-8);
}

TEST_CASE("vf_gradient vanishes when the target is the barycenter itself") {
  const auto p1 = testutil::canonical_aux1();
  const auto p2 = testutil::canonical_aux2();
  const SimplexWeights lam(Eigen::Vector2d(0.4, 0.6));
  const auto density = testutil::canonical_target_density(lam);
  RngStream rng(8);
  const SampleSet target = sample_grid_density(density, 100000, rng);
  const Grid g = Grid::cover({p1, p2}, 4096);
  const VanillaObjective problem(target, {log_density_fn(p1), log_density_fn(p2)}, g);
  CHECK(problem.gradient(lam).lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("frank_wolfe on a quadratic with interior minimizer") {
  const Eigen::Vector2d c(0.3, 0.7);
  auto objective = [&](const SimplexWeights& w) { return (w.lambda() - c).squaredNorm(); };
  auto gradient = [&](const SimplexWeights& w) { return VectorXd(2.0 * (w.lambda() - c)); };
  const FrankWolfeTrace trace = frank_wolfe(objective, gradient, SimplexWeights::uniform(2), 500);

  CHECK((trace.iterates.back().lambda() - c).lpNorm<Eigen::Infinity>() < 0.02);

  // gamma_1 = 1 jumps to a vertex; gamma_2 = 2/5 blends 40% toward the next one.
  const VectorXd x2 = trace.iterates[1].lambda();
  CHECK(((x2 - Eigen::Vector2d(0.0, 1.0)).lpNorm<Eigen::Infinity>() == 0.0 ||
         (x2 - Eigen::Vector2d(1.0, 0.0)).lpNorm<Eigen::Infinity>() == 0.0));
  const VectorXd x3 = trace.iterates[2].lambda();
  CHECK((x3 - Eigen::Vector2d(0.4, 0.6)).lpNorm<Eigen::Infinity>() < 1e-15);

  for (const auto& it : trace.iterates) {
    CHECK(it.lambda().minCoeff() >= 0.0);
    CHECK(it.lambda().sum() == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("frank_wolfe lands exactly on a vertex minimizer") {
  const Eigen::Vector2d c(1.0, 0.0);
  auto objective = [&](const SimplexWeights& w) { return (w.lambda() - c).squaredNorm(); };
  auto gradient = [&](const SimplexWeights& w) { return VectorXd(2.0 * (w.lambda() - c)); };
  const FrankWolfeTrace trace = frank_wolfe(objective, gradient, SimplexWeights::uniform(2), 20);
  for (std::size_t i = 1; i < trace.iterates.size(); ++i) {
    CHECK(trace.iterates[i].lambda()[0] == 1.0);
    CHECK(trace.iterates[i].lambda()[1] == 0.0);
  }
}

TEST_CASE("frank_wolfe aborts on a non-finite gradient with the trace so far") {
  int calls = 0;
  auto objective = [](const SimplexWeights& w) { return w.lambda().squaredNorm(); };
  auto gradient = [&](const SimplexWeights& w) -> VectorXd {
    if (++calls >= 4) return VectorXd::Constant(2, std::nan(""));
    return 2.0 * w.lambda();
  };
  const FrankWolfeTrace trace = frank_wolfe(objective, gradient, SimplexWeights::uniform(2), 100);
  CHECK(trace.aborted_at == 4);
  CHECK(trace.iterates.size() == 4);  // three completed iterations plus the final point
}

TEST_CASE("run_vanilla_fusion recovers planted weights (grid-search oracle)") {
  const SimplexWeights lambda_true(Eigen::Vector2d(0.3, 0.7));
  const auto density = testutil::canonical_target_density(lambda_true);
  RngStream rng(9);
  const SampleSet target = sample_grid_density(density, 10000, rng);
  const std::vector<GaussianMixture> refs{testutil::canonical_aux1(), testutil::canonical_aux2()};
  const Grid g = Grid::cover(refs, 4096);
  const OuSchedule schedule(1.0, std::sqrt(2.0), 5.0, 500);

  const VanillaFusionResult r = run_vanilla_fusion(target, refs, schedule, g, 500);
  CHECK((r.weights.lambda() - lambda_true.lambda()).lpNorm<Eigen::Infinity>() < 0.05);

  const VanillaObjective problem(target, {log_density_fn(refs[0]), log_density_fn(refs[1])}, g);
  const SimplexWeights oracle = grid_argmin_2([&](const SimplexWeights& w) { return problem.objective(w); }, 0.005);
  CHECK((r.weights.lambda() - oracle.lambda()).lpNorm<Eigen::Infinity>() < 0.02);
  CHECK(r.fused != nullptr);
}

TEST_CASE("run_vanilla_fusion concentrates on the generating reference") {
  RngStream rng(10);
  const std::vector<GaussianMixture> refs{testutil::canonical_aux1(), testutil::canonical_aux2()};
  const SampleSet target = mixture_sample(refs[0], 5000, rng);
  const Grid g = Grid::cover(refs, 4096);
  const OuSchedule schedule(1.0, std::sqrt(2.0), 5.0, 500);
  const VanillaFusionResult r = run_vanilla_fusion(target, refs, schedule, g, 500);
  CHECK(r.weights.lambda()[0] > 0.9);
}

TEST_CASE("identical references give a constant objective and any simplex point") {
  RngStream rng(11);
  const auto m = testutil::canonical_aux1();
  const SampleSet target = mixture_sample(m, 1000, rng);
  const std::vector<GaussianMixture> refs{m, m};
  const Grid g = Grid::cover(refs, 2048);
  const OuSchedule schedule(1.0, std::sqrt(2.0), 5.0, 500);
  const VanillaFusionResult r = run_vanilla_fusion(target, refs, schedule, g, 50);
  CHECK(r.weights.lambda().sum() == Catch::Approx(1.0).margin(1e-10));

  const VanillaObjective problem(target, {log_density_fn(m), log_density_fn(m)}, g);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double t = 0.0; t <= 1.0 + 1e-12; t += 0.05) {
    const double tt = std::min(t, 1.0);
    const double v = problem.objective(SimplexWeights(Eigen::Vector2d(tt, 1.0 - tt)));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 1e-10);
}

TEST_CASE("frank_wolfe primal gap decays at the 1/tau envelope") {
  const SimplexWeights lambda_true(Eigen::Vector2d(0.3, 0.7));
  const auto density = testutil::canonical_target_density(lambda_true);
  RngStream rng(12);
  const SampleSet target = sample_grid_density(density, 5000, rng);
  const std::vector<GaussianMixture> refs{testutil::canonical_aux1(), testutil::canonical_aux2()};
  const Grid g = Grid::cover(refs, 4096);
  const VanillaObjective problem(target, {log_density_fn(refs[0]), log_density_fn(refs[1])}, g);

  const FrankWolfeTrace trace = frank_wolfe([&](const SimplexWeights& w) { return problem.objective(w); },
                                            [&](const SimplexWeights& w) { return problem.gradient(w); },
                                            SimplexWeights::uniform(2), 500);
  const SimplexWeights oracle = grid_argmin_2([&](const SimplexWeights& w) { return problem.objective(w); }, 0.005);
  const double f_star = problem.objective(oracle);

  // Fit the O(1/tau) constant over the early window; the open-loop step rule
  // zig-zags, so a single iterate can sit arbitrarily close to the optimum.
  double fitted = 0.0;
  for (std::size_t tau = 10; tau <= 50; ++tau) {
    const double h = std::max(trace.objective[tau - 1] - f_star, 0.0);
    fitted = std::max(fitted, h * (static_cast<double>(tau) + 3.0));
  }
  REQUIRE(fitted > 0.0);
  for (std::size_t tau = 10; tau <= 500; ++tau) {
    const double h = trace.objective[tau - 1] - f_star;
    CHECK(h * (static_cast<double>(tau) + 3.0) <= 2.0 * fitted + 1e-12);
  }
}
