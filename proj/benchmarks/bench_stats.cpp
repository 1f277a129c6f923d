#include <benchmark/benchmark.h>

#include <vector>

#include "smartcrop/rng.h"
#include "smartcrop/stats.h"

using namespace smartcrop;

namespace {

void BM_paired_bootstrap(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(31);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.gauss();
        b[i] = rng.gauss() + 0.1;
    }
    for (auto _ : state) {
        BootstrapResult r = paired_bootstrap(a, b, 10000, 7);
        benchmark::DoNotOptimize(r.p_value);
    }
}

void BM_mean_ci(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(37);
    std::vector<double> values(n);
    for (double& v : values) v = rng.gauss();
    for (auto _ : state) {
        MeanCi ci = mean_ci(values, 2000, 11);
        benchmark::DoNotOptimize(ci.mean);
    }
}

}  // namespace

BENCHMARK(BM_paired_bootstrap)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mean_ci)->Arg(32)->Arg(256);
