#include <benchmark/benchmark.h>

#include <vector>

#include "smartcrop/crop.h"
#include "smartcrop/rng.h"

using namespace smartcrop;

namespace {

EosProbabilities random_schedule(std::size_t len, std::uint64_t seed) {
    EosProbabilities p;
    p.prompt_len = 16;
    Rng rng(seed);
    // Tiny per-cell mass, as a long canvas produces in practice.
    for (std::size_t i = 0; i < len; ++i) p.values.push_back(1e-4 * rng.uniform01());
    return p;
}

void BM_survival_curve(benchmark::State& state) {
    const EosProbabilities p = random_schedule(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) {
        SurvivalCurve curve = survival_curve(p);
        benchmark::DoNotOptimize(curve.cumulative.data());
    }
}

void BM_predicted_length(benchmark::State& state) {
    const SurvivalCurve curve =
        survival_curve(random_schedule(static_cast<std::size_t>(state.range(0)), 13));
    for (auto _ : state) {
        CropDecision d = predicted_length(curve, 0.9);
        benchmark::DoNotOptimize(d);
    }
}

}  // namespace

BENCHMARK(BM_survival_curve)->Arg(128)->Arg(1024)->Arg(8192);
BENCHMARK(BM_predicted_length)->Arg(128)->Arg(8192);
