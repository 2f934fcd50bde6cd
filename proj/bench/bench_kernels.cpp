#include "mmgen/metrics/fid.hpp"
#include "mmgen/metrics/gaussian.hpp"
#include "mmgen/metrics/sim.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mmgen::metrics;

namespace {

std::vector<Embedding> samples(std::size_t n, std::size_t d, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<Embedding> out(n, Embedding(d));
    for (auto& v : out) {
        for (auto& x : v) x = g(rng);
    }
    return out;
}

void BM_FitGaussian(benchmark::State& st) {
    const auto xs = samples(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)), 1);
    for (auto _ : st) benchmark::DoNotOptimize(fit_gaussian(xs));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_FitGaussianReference(benchmark::State& st) {
    const auto xs = samples(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)), 1);
    for (auto _ : st) benchmark::DoNotOptimize(fit_gaussian_reference(xs));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SimScores(benchmark::State& st) {
    const auto a = samples(static_cast<std::size_t>(st.range(0)), 512, 2);
    const auto b = samples(static_cast<std::size_t>(st.range(0)), 512, 3);
    for (auto _ : st) benchmark::DoNotOptimize(sim_scores(a, b));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SimScoresReference(benchmark::State& st) {
    const auto a = samples(static_cast<std::size_t>(st.range(0)), 512, 2);
    const auto b = samples(static_cast<std::size_t>(st.range(0)), 512, 3);
    for (auto _ : st) benchmark::DoNotOptimize(sim_scores_reference(a, b));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Fid(benchmark::State& st) {
    const auto d = static_cast<std::size_t>(st.range(0));
    const auto fx = fit_gaussian(samples(4 * d, d, 4));
    const auto fy = fit_gaussian(samples(4 * d, d, 5));
    for (auto _ : st) benchmark::DoNotOptimize(fid_score(fx, fy));
}

} // namespace

BENCHMARK(BM_FitGaussian)->Args({1284, 64})->Args({1284, 512})->Args({8192, 256});
BENCHMARK(BM_FitGaussianReference)->Args({1284, 64})->Args({1284, 512})->Args({8192, 256});
BENCHMARK(BM_SimScores)->Arg(1284)->Arg(16384);
BENCHMARK(BM_SimScoresReference)->Arg(1284)->Arg(16384);
BENCHMARK(BM_Fid)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
