#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "boxnorm/prox.hpp"
#include "boxnorm/prox_reference.hpp"
#include "boxnorm/spectral.hpp"
#include "boxnorm/vecnorm.hpp"

using namespace boxnorm;

namespace {

DenseVector gaussian_vector(Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseVector w(d);
  for (Index i = 0; i < d; ++i) w(i) = gauss(rng);
  return w;
}

DenseMatrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix w(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) w(i, j) = gauss(rng);
  return w;
}

Index k_of(Index d) { return std::max<Index>(1, d / 20); }

}  // namespace

static void BM_prox_sq_ksup_fast(benchmark::State& state) {
  const Index d = state.range(0);
  KSupportParams kp;
  kp.k = k_of(d);
  ProxConfig pc;
  // Rotate over enough inputs that each call sees data outside cache,
  // as it would between solver iterations.
  const int rot = std::max<int>(4, static_cast<int>((16 << 20) / (8 * d)));
  std::vector<DenseVector> ws(rot);
  for (int r = 0; r < rot; ++r) ws[r] = gaussian_vector(d, 7 + r);
  int at = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(prox_sq_ksup(ws[(at++) % rot], kp, pc).x.sum());
  state.SetComplexityN(static_cast<std::int64_t>(d));
}
BENCHMARK(BM_prox_sq_ksup_fast)
    ->RangeMultiplier(2)
    ->Range(1 << 10, 1 << 15)
    ->Complexity(benchmark::oNLogN);

static void BM_prox_sq_ksup_reference(benchmark::State& state) {
  const Index d = state.range(0);
  KSupportParams kp;
  kp.k = k_of(d);
  const DenseVector w = gaussian_vector(d, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(prox_sq_ksup_reference(w, kp, 1.0).sum());
  state.SetComplexityN(static_cast<std::int64_t>(d));
}
BENCHMARK(BM_prox_sq_ksup_reference)
    ->RangeMultiplier(2)
    ->Range(1 << 10, 1 << 15)
    ->Complexity();

static void BM_prox_sq_box(benchmark::State& state) {
  const Index d = state.range(0);
  const BoxParams p =
      BoxParams::from_k(1e-3, 1.0, static_cast<double>(k_of(d)), d);
  ProxConfig pc;
  const DenseVector w = gaussian_vector(d, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(prox_sq_box(w, p, pc).x.sum());
}
BENCHMARK(BM_prox_sq_box)->RangeMultiplier(2)->Range(1 << 10, 1 << 15);

static void BM_box_norm(benchmark::State& state) {
  const Index d = state.range(0);
  const BoxParams p =
      BoxParams::from_k(1e-3, 1.0, static_cast<double>(k_of(d)), d);
  const DenseVector w = gaussian_vector(d, 13);
  for (auto _ : state) benchmark::DoNotOptimize(box_norm(w, p).value);
}
BENCHMARK(BM_box_norm)->RangeMultiplier(2)->Range(1 << 10, 1 << 15);

static void BM_spectral_prox_sq_box(benchmark::State& state) {
  const Index d = state.range(0);
  const BoxParams p = BoxParams::from_k(1e-3, 1.0, 5.0, d);
  const PenaltySelector sel = PenaltySelector::sq_box(p);
  const DenseMatrix w = gaussian_matrix(d, d, 17);
  for (auto _ : state)
    benchmark::DoNotOptimize(spectral_prox(w, sel, 0.5).norm());
}
BENCHMARK(BM_spectral_prox_sq_box)->Arg(64)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
