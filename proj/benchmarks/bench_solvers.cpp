#include <benchmark/benchmark.h>

#include "barrierflow/flow.hpp"
#include "barrierflow/solvers.hpp"

using namespace barrierflow;

namespace {

void BM_RhbStep(benchmark::State& state, const char* problem_name) {
  const Problem problem = registry_get(problem_name);
  auto kernel = make_kernel(problem.default_kernel);
  std::mt19937_64 rng(1);
  const Vector x = problem.start;
  const Vector d = problem.oracle.subgrad(x, rng);
  const Vector xi = Vector::Zero(problem.dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rhb_step(*kernel, problem.manifold, problem.region, x, d, xi, 0.01));
  }
}

void BM_MirrorStepDualNewton(benchmark::State& state) {
  const Problem problem = registry_get("lin-simplex:8");
  auto kernel = make_kernel("neglog");
  std::mt19937_64 rng(1);
  const Vector x = problem.start;
  const Vector d = problem.oracle.subgrad(x, rng);
  const Vector xi = Vector::Zero(problem.dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mirror_step_dual_newton(*kernel, problem.manifold, x, d, xi, 0.01));
  }
}

void BM_Classify(benchmark::State& state) {
  const Problem problem = registry_get("lin-simplex:8");
  auto kernel = make_kernel(problem.default_kernel);
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(problem, *kernel, problem.start));
  }
}

void BM_FlowSegment(benchmark::State& state) {
  const Problem problem = registry_get("lin-simplex");
  auto kernel = make_kernel(problem.default_kernel);
  FlowConfig cfg;
  cfg.h = 1e-3;
  cfg.t_max = 1.0;
  cfg.record_dt = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(problem, *kernel, problem.start, cfg));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_RhbStep, lin_simplex, "lin-simplex:8");
BENCHMARK_CAPTURE(BM_RhbStep, nn_pca, "nn-pca");
BENCHMARK(BM_MirrorStepDualNewton);
BENCHMARK(BM_Classify);
BENCHMARK(BM_FlowSegment);

BENCHMARK_MAIN();
