#include <benchmark/benchmark.h>

#include "polyproc/moments.hpp"
#include "polyproc/montecarlo.hpp"
#include "polyproc/multilinear.hpp"
#include "polyproc/oracle.hpp"
#include "polyproc/process.hpp"

namespace {

using namespace polyproc;

const OUProcess& ou() {
  static const OUProcess p = OUProcess::exponential_kernel(FilipovicGeometry{});
  return p;
}

void BM_PerpCovariance(benchmark::State& state) {
  const double tau = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(ou_perp_covariance(ou(), 0.0, tau));
}
BENCHMARK(BM_PerpCovariance)->Arg(1)->Arg(5)->Arg(10);

void BM_MomentTensor(benchmark::State& state) {
  const GaussianLaw law = ou_perp_covariance(ou(), 0.0, 1.0);
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_moment_tensor(law, m));
}
BENCHMARK(BM_MomentTensor)->DenseRange(2, 6, 2)->Unit(benchmark::kMillisecond);

void BM_WordExpansion(benchmark::State& state) {
  const Algebra alg = Algebra::matrix(2);
  const auto k = static_cast<std::size_t>(state.range(0));
  const MatrixLevyProcess p{2, 0.2, 1.0};
  const Decomposition d{alg.element(Eigen::VectorXd::LinSpaced(4, 0.5, 2.0)), p.increment_law(0.0, 1.0)};
  const KLinearMap map = KLinearMap::product(alg, k);
  for (auto _ : state) benchmark::DoNotOptimize(cond_expectation_words(map, d, {20000, 1, false}));
}
BENCHMARK(BM_WordExpansion)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_CommutativeMoment(benchmark::State& state) {
  const Algebra alg = Algebra::grid();
  const Decomposition d{alg.one(), ou_perp_covariance(ou(), 0.0, 1.0)};
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cond_moment_commutative(k, alg, d));
}
BENCHMARK(BM_CommutativeMoment)->DenseRange(1, 8);

void BM_MonteCarlo(benchmark::State& state) {
  const Algebra alg = Algebra::grid();
  const Decomposition d{alg.one(), ou_perp_covariance(ou(), 0.0, 1.0)};
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    const MCEstimate e = monte_carlo(MCConfig{100000, 1, 4096, threads}, 16, [&](Rng& rng) {
      return Eigen::VectorXd(sample_perp(d, rng).coords.array().square());
    });
    benchmark::DoNotOptimize(e.mean);
  }
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
