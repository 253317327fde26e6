#include <benchmark/benchmark.h>

#include <random>

#include "barrierflow/kernels.hpp"

using namespace barrierflow;

namespace {

Vector interior_point(KernelKind kind, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  if (kind == KernelKind::ball) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    return 0.5 / x.norm() * x;
  }
  if (kind == KernelKind::log_det) {
    const int d = svec_order(n);
    Matrix X = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i) X(i, i) = u(rng);
    return sym_to_svec(X);
  }
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

void BM_KernelGradient(benchmark::State& state, const char* id) {
  auto kernel = make_kernel(id);
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const Vector x = interior_point(kernel->kind(), n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel->grad(x));
  }
}

void BM_HessInvApply(benchmark::State& state, const char* id) {
  auto kernel = make_kernel(id);
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const Vector x = interior_point(kernel->kind(), n, rng);
  const Vector v = Vector::Ones(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel->hess_inv_apply(x, v));
  }
}

void BM_MirrorInverse(benchmark::State& state, const char* id) {
  auto kernel = make_kernel(id);
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const Vector z = kernel->grad(interior_point(kernel->kind(), n, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel->mirror_inverse(z));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_KernelGradient, entropy, "entropy")->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_KernelGradient, ball, "ball")->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_KernelGradient, logdet, "logdet")->Arg(6)->Arg(55);
BENCHMARK_CAPTURE(BM_HessInvApply, entropy, "entropy")->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_HessInvApply, logdet, "logdet")->Arg(6)->Arg(55);
BENCHMARK_CAPTURE(BM_MirrorInverse, entropy, "entropy")->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_MirrorInverse, power, "power:1.5")->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_MirrorInverse, ball, "ball")->Arg(8)->Arg(64);
