#include <benchmark/benchmark.h>

#include "smartcrop/matrix.h"
#include "smartcrop/rng.h"

using namespace smartcrop;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Rng rng(seed);
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = rng.gauss();
    return m;
}

void BM_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, 64, 1);
    const Matrix b = random_matrix(64, 64, 2);
    for (auto _ : state) {
        Matrix c = matmul(a, b);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n * 64 * 64));
}

void BM_matmul_nt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, 64, 3);
    const Matrix b = random_matrix(n, 64, 4);
    for (auto _ : state) {
        Matrix c = matmul_nt(a, b);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n * n * 64));
}

void BM_row_softmax(benchmark::State& state) {
    const Matrix m = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 5);
    for (auto _ : state) {
        Matrix s = row_softmax(m);
        benchmark::DoNotOptimize(s.data.data());
    }
}

}  // namespace

BENCHMARK(BM_matmul)->Arg(42)->Arg(96)->Arg(170);
BENCHMARK(BM_matmul_nt)->Arg(42)->Arg(96)->Arg(170);
BENCHMARK(BM_row_softmax)->Arg(96)->Arg(170);
