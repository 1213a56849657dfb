#include <benchmark/benchmark.h>

#include "ces/bell.hpp"
#include "ces/detection.hpp"
#include "ces/measures.hpp"
#include "ces/protocol.hpp"
#include "ces/tomography.hpp"

namespace {

ces::DetectorParams calibrated_detector() {
  ces::DetectorParams d;
  d.eta_det = 0.2;
  d.dark_rate = 5e-4;
  d.late_emission_error = 0.08;
  return d;
}

void BM_SimulateCounts(benchmark::State& state) {
  const ces::DensityMatrix rho = ces::states::werner(0.9);
  const ces::DetectorParams det = calibrated_detector();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  ces::SimulationOptions opts;
  opts.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ces::simulate_counts(rho, {0.0, 22.5}, n, det, 7, opts));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SimulateCounts)->Arg(1 << 16)->Arg(1 << 20);

void BM_MleReconstruct(benchmark::State& state) {
  const ces::TomographyDataset ds =
      ces::simulate_tomography_dataset(ces::states::werner(0.85), 100000, calibrated_detector(), 3);
  const ces::WeightTable table = ces::weights_from_dataset(ds);
  for (auto _ : state) benchmark::DoNotOptimize(ces::mle_reconstruct(table));
}
BENCHMARK(BM_MleReconstruct);

void BM_LinearInversion(benchmark::State& state) {
  const ces::WeightTable table = ces::exact_weights(ces::states::werner(0.85));
  for (auto _ : state) benchmark::DoNotOptimize(ces::linear_inversion(table));
}
BENCHMARK(BM_LinearInversion);

void BM_EigHermitian(benchmark::State& state) {
  const ces::HermitianOperator m(ces::states::werner(0.7).matrix());
  for (auto _ : state) benchmark::DoNotOptimize(ces::eig_hermitian(m));
}
BENCHMARK(BM_EigHermitian);

void BM_EntanglementReport(benchmark::State& state) {
  const ces::DensityMatrix rho = ces::final_state(ces::NoiseParams{}, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(ces::report(rho));
}
BENCHMARK(BM_EntanglementReport);

}  // namespace
BENCHMARK_MAIN();
