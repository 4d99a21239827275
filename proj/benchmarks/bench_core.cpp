#include <benchmark/benchmark.h>

#include "qevent/counterexample.hpp"
#include "qevent/protocols.hpp"

using namespace qevent;

namespace {

MeasurementEnsemble projective_ensemble(Eigen::Index d, int m,
                                        std::uint64_t seed) {
  SplitRng rng(seed);
  std::vector<TwoOutcomeMeasurement> ms;
  for (int i = 0; i < m; ++i) {
    ms.emplace_back(random_projector(
        d, 1 + static_cast<Eigen::Index>(rng.pick(static_cast<std::size_t>(d - 1))), rng));
  }
  return MeasurementEnsemble(std::move(ms));
}

void BM_PsdSqrt(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  SplitRng rng(1);
  ComplexMatrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      g(i, j) = Complex(rng.normal(), rng.normal());
    }
  }
  const ComplexMatrix psd = g * g.adjoint();
  for (auto _ : state) {
    PsdOperator op(psd);
    benchmark::DoNotOptimize(op.sqrt());
  }
}
BENCHMARK(BM_PsdSqrt)->Arg(4)->Arg(16)->Arg(64);

void BM_BlendedExactMillionRounds(benchmark::State& state) {
  const MeasurementEnsemble ens = projective_ensemble(16, 4, 2);
  const DensityMatrix rho =
      random_state(16, 3, StateKind::HilbertSchmidtMixed);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blended_exact(rho, ens, 1000000).accept_prob);
  }
}
BENCHMARK(BM_BlendedExactMillionRounds);

void BM_RandomExactEnumeration(benchmark::State& state) {
  const MeasurementEnsemble ens = projective_ensemble(4, 3, 4);
  const DensityMatrix rho = random_state(4, 5, StateKind::HilbertSchmidtMixed);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(random_exact(rho, ens, k).accept_prob);
  }
}
BENCHMARK(BM_RandomExactEnumeration)->Arg(3)->Arg(5)->Arg(7);

void BM_BlendedTrajectoryShot(benchmark::State& state) {
  const MeasurementEnsemble ens = projective_ensemble(4, 4, 6);
  const BlendedMeasurement blended(ens);
  const DensityMatrix rho = random_state(4, 7);
  std::uint64_t shot = 0;
  for (auto _ : state) {
    SplitRng rng = SplitRng::for_stream(11, shot++);
    benchmark::DoNotOptimize(
        sample_blended_trajectory(rho, blended, 16, true, rng));
  }
}
BENCHMARK(BM_BlendedTrajectoryShot);

void BM_RandomTrajectoryShot(benchmark::State& state) {
  const MeasurementEnsemble ens = projective_ensemble(4, 4, 8);
  const DensityMatrix rho = random_state(4, 9);
  std::uint64_t shot = 0;
  for (auto _ : state) {
    SplitRng rng = SplitRng::for_stream(13, shot++);
    benchmark::DoNotOptimize(
        sample_random_trajectory(rho, ens, 16, true, rng));
  }
}
BENCHMARK(BM_RandomTrajectoryShot);

void BM_CounterexampleShot(benchmark::State& state) {
  // one full random-kind shot at eps = 0.1; absorb time ~ eps^-3 rounds
  const CounterexampleInstance inst = build_random_counterexample(0.1);
  std::uint64_t shot = 0;
  for (auto _ : state) {
    EngineConfig config{.rng_seed = shot++, .shots = 1,
                        .halt_on_accept = true, .threads = 1};
    benchmark::DoNotOptimize(run_counterexample(inst, 0, config));
  }
}
BENCHMARK(BM_CounterexampleShot);

}  // namespace

BENCHMARK_MAIN();
