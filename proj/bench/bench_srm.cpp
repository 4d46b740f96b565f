#include "srm/kernels.hpp"
#include "srm/srm.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Workload {
  srm::RowMatrix rows;
  std::vector<srm::PlaneRotor> rotors;
  std::vector<double> thetas;
};

// Gaussian activations in R^n against a random basis of m vectors.
Workload make_workload(int n, int m, int samples) {
  Workload w;
  const auto basis = srm::gen_random(n, m, 11);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  srm::RowMatrix raw(samples, n);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = g(rng);
  w.rows = srm::ActivationSet::from_rows(raw).normalized();
  for (const auto& p : srm::plane_set(basis, srm::PlaneMode::Combination).pairs) {
    w.rotors.push_back(srm::plane_rotor(basis.vector(p.alpha), basis.vector(p.beta), p));
  }
  w.thetas = srm::theta_grid(360);
  return w;
}

void BM_SerialReference(benchmark::State& state) {
  const auto w = make_workload(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)), 2000);
  for (auto _ : state) {
    auto out = srm::kernels::sweep_planes_serial(w.rows, w.rotors, w.thetas, 0.9,
                                                 srm::kernels::Count::Positive);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.rotors.size()));
}

void BM_ProjectedSingleThread(benchmark::State& state) {
  const auto w = make_workload(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)), 2000);
  for (auto _ : state) {
    auto out = srm::kernels::sweep_planes(w.rows, w.rotors, w.thetas, 0.9,
                                          srm::kernels::Count::Positive, 1);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.rotors.size()));
}

void BM_ProjectedParallel(benchmark::State& state) {
  const auto w = make_workload(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)), 2000);
  for (auto _ : state) {
    auto out = srm::kernels::sweep_planes(w.rows, w.rotors, w.thetas, 0.9,
                                          srm::kernels::Count::Positive, 0);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.rotors.size()));
}

}  // namespace

BENCHMARK(BM_SerialReference)->Args({10, 20})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectedSingleThread)->Args({10, 20})->Args({24, 48})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectedParallel)->Args({10, 20})->Args({24, 48})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
