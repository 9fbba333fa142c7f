#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "nlma/builders.hpp"
#include "nlma/geometry.hpp"
#include "nlma/kernel.hpp"
#include "nlma/operator.hpp"
#include "nlma/spectral.hpp"

namespace {

nlma::GridFunction cone(int d, double L, double h) {
    return nlma::make_smooth_cone(nlma::Grid::with_spacing(d, L, h), 1.0, nlma::identity_mat());
}

void BM_EvalFull(benchmark::State& state) {
    const int d = int(state.range(0));
    auto f = d == 1 ? cone(1, 20.0, 0.05) : cone(2, 8.0, 0.125);
    auto op = nlma::OperatorParams::make(d, 1.5);
    const nlma::Vec x{0.5, d == 2 ? -0.25 : 0.0, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(nlma::eval_ma(f, x, op, nlma::KernelSpec::full()).value);
}
BENCHMARK(BM_EvalFull)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_EvalNearPinned(benchmark::State& state) {
    auto f = cone(2, 8.0, 0.125);
    auto op = nlma::OperatorParams::make(2, 1.5);
    const nlma::Vec x{0.5, -0.25, 0.0};
    const auto k = nlma::KernelSpec::near_pinned(0.5);
    for (auto _ : state) benchmark::DoNotOptimize(nlma::eval_ma(f, x, op, k).value);
}
BENCHMARK(BM_EvalNearPinned)->Unit(benchmark::kMicrosecond);

void BM_ConvexEnvelope(benchmark::State& state) {
    const int n = int(state.range(0));
    auto g = nlma::Grid::make(2, n, 4.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto y = g.coord(k);
        v[k] = std::sqrt(1.0 + nlma::dot(y, y)) + 0.05 * std::sin(7.0 * y[0]) * std::cos(5.0 * y[1]);
    }
    auto f = cone(2, 4.0, 8.0 / (n - 1)).with_values(v);
    for (auto _ : state) benchmark::DoNotOptimize(nlma::convex_envelope(f).values().data());
}
BENCHMARK(BM_ConvexEnvelope)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FracLaplacian(benchmark::State& state) {
    const int n = int(state.range(0));
    auto f = nlma::make_smooth_cone(nlma::Grid::make(2, n, 8.0), 1.0, nlma::identity_mat());
    for (auto _ : state) benchmark::DoNotOptimize(nlma::frac_laplacian(f, 1.5).values().data());
}
BENCHMARK(BM_FracLaplacian)->Arg(65)->Arg(129)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
