#include "atomline/dual_certificate.hpp"
#include "atomline/jackson_kernel.hpp"
#include "atomline/rng.hpp"
#include "atomline/solver.hpp"

#include <benchmark/benchmark.h>

using namespace atomline;

namespace {

LineSpectrum instance(int n, int k, std::uint64_t seed) {
    return LineSpectrum(random_separated_freqs(k, 3.0 / n, derive_key(seed, 1)),
                        random_coeffs(k, 1.0, 1.0, derive_key(seed, 2)));
}

void BM_GridScanSerial(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const KernelContext ctx = KernelContext::from_n(n);
    const DualPolynomial Q = construct_noiseless_certificate(instance(n, 3, 5), ctx).Q;
    for (auto _ : st) benchmark::DoNotOptimize(Q.abs_on_grid_serial(32 * n));
}

void BM_GridScanParallel(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const KernelContext ctx = KernelContext::from_n(n);
    const DualPolynomial Q = construct_noiseless_certificate(instance(n, 3, 5), ctx).Q;
    for (auto _ : st) benchmark::DoNotOptimize(Q.abs_on_grid(32 * n));
}

void BM_KernelMatrix(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const KernelContext ctx = KernelContext::from_n(n);
    const RVec f = instance(n, 8, 9).freqs;
    for (auto _ : st) benchmark::DoNotOptimize(kernel_matrix(ctx, 2, f));
}

void BM_SolveWitness(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const KernelContext ctx = KernelContext::from_n(n);
    const LineSpectrum truth = instance(n, 3, 11);
    const SampleVector clean = synthesize(truth, n);
    const double sigma = 1e-4 / std::sqrt(std::log(n) / n);
    const SampleVector noisy = add_noise(clean, NoiseSpec{sigma, 12});
    SolverConfig cfg;
    cfg.lambda = 2.0 * gamma0(sigma, n);
    for (auto _ : st) benchmark::DoNotOptimize(solve_witness(ctx, clean, noisy, truth, cfg));
}

void BM_KernelTables(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernel_tables(130));
}

}  // namespace

BENCHMARK(BM_GridScanSerial)->Arg(130)->Arg(520);
BENCHMARK(BM_GridScanParallel)->Arg(130)->Arg(520);
BENCHMARK(BM_KernelMatrix)->Arg(130);
BENCHMARK(BM_SolveWitness)->Arg(130)->Arg(520);
BENCHMARK(BM_KernelTables)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
