#include <benchmark/benchmark.h>

#include <cstdint>

#include "decodi/concept_world.hpp"
#include "decodi/sampler.hpp"
#include "decodi/stats.hpp"

using namespace decodi;

namespace {

const ConceptWorld& nurse_world() {
    static const ConceptWorld world = builtin_worlds().at("nurse");
    return world;
}

RunConfig nurse_run(Mode mode) {
    RunConfig run;
    run.world = &nurse_world();
    run.prompt_condition = "nurse";
    run.bias_condition = "bias:female";
    run.mode = mode;
    run.seeds = {1};
    return run;
}

void BM_generate_one_original(benchmark::State& state) {
    const RunConfig run = nurse_run(Mode::ORIGINAL);
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_one(run, seed++));
}
BENCHMARK(BM_generate_one_original);

void BM_generate_one_debiased(benchmark::State& state) {
    const RunConfig run = nurse_run(Mode::DEBIASED);
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_one(run, seed++));
}
BENCHMARK(BM_generate_one_debiased);

void BM_responsibilities(benchmark::State& state) {
    const ConceptWorld& world = nurse_world();
    const std::vector<double>& weights = world.condition_weights("nurse");
    const Vec z{1.25, -0.5};
    for (auto _ : state) benchmark::DoNotOptimize(responsibilities(z, 25, weights, world));
}
BENCHMARK(BM_responsibilities);

void BM_posterior_mean(benchmark::State& state) {
    const ConceptWorld& world = nurse_world();
    const std::vector<double>& weights = world.condition_weights("nurse");
    const Vec z{1.25, -0.5};
    for (auto _ : state) benchmark::DoNotOptimize(posterior_mean(z, 25, weights, world));
}
BENCHMARK(BM_posterior_mean);

void BM_chi_square_cdf(benchmark::State& state) {
    double x = 0.0;
    for (auto _ : state) {
        x += 0.37;
        if (x > 40.0) x -= 40.0;
        benchmark::DoNotOptimize(chi_square_cdf(x, 3));
    }
}
BENCHMARK(BM_chi_square_cdf);

}  // namespace

BENCHMARK_MAIN();
