// Serial reference against the OpenMP kernels on a 99x99 Poisson grid.
#include <benchmark/benchmark.h>

#include "mpexp/kernels.hpp"

namespace {

using namespace mpexp;

struct Fixture {
  CsrMatrix a = poisson2d(99);
  Vector x = poisson_rhs(99);
  Vector y = Vector::Zero(a.n_rows);

  kernels::SpmvArgs args() {
    return {a, a.values, {x.data(), static_cast<std::size_t>(x.size())}, {}, {},
            {y.data(), static_cast<std::size_t>(y.size())}};
  }
};

template <void (*Spmv)(const kernels::SpmvArgs&)>
void BM_spmv(benchmark::State& state) {
  Fixture f;
  for (auto _ : state) {
    Spmv(f.args());
    benchmark::DoNotOptimize(f.y.data());
  }
}

template <void (*Spmv)(const kernels::SpmvArgs&, const Rounder&, ChopMode)>
void BM_spmv_chopped(benchmark::State& state) {
  Fixture f;
  const Rounder r(formats::fp16());
  const auto mode = static_cast<ChopMode>(state.range(0));
  for (auto _ : state) {
    Spmv(f.args(), r, mode);
    benchmark::DoNotOptimize(f.y.data());
  }
}

}  // namespace

BENCHMARK(BM_spmv<kernels::serial::spmv>)->Name("spmv/serial");
BENCHMARK(BM_spmv<kernels::omp::spmv>)->Name("spmv/omp");
BENCHMARK(BM_spmv_chopped<kernels::serial::spmv_chopped>)->Name("spmv_chopped_half/serial")->Arg(0)->Arg(1);
BENCHMARK(BM_spmv_chopped<kernels::omp::spmv_chopped>)->Name("spmv_chopped_half/omp")->Arg(0)->Arg(1);

BENCHMARK_MAIN();
