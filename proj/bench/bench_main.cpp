#include <benchmark/benchmark.h>

#include "mmtc/config.hpp"
#include "mmtc/harness.hpp"
#include "mmtc/rls.hpp"
#include "mmtc/rng.hpp"

using namespace mmtc;

namespace {

void BM_RlsUpdate(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    FilterBank bank(1, L, false, RlsHyperParams::standard());
    Rng rng(7);
    CVec y(L);
    for (auto& v : y) v = rng.complex_normal(1.0);
    for (auto _ : state) {
        auto r = bank.rls_update(0, y, cplx{1.0, 0.0});
        benchmark::DoNotOptimize(r);
    }
    state.SetComplexityN(L);
}
BENCHMARK(BM_RlsUpdate)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

ExperimentConfig small_experiment() {
    Json doc = default_config_json();
    for (const char* s : {"system.N=32", "system.M=16", "trials=8", "snr_db=[12]",
                          R"(detectors=["lmmse","aa_cl_rls","aa_cl_df"])"})
        apply_override(doc, s);
    return config_from_json(doc);
}

void BM_ExperimentSerial(benchmark::State& state) {
    const auto cfg = small_experiment();
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg));
}
BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond);

void BM_ExperimentParallel(benchmark::State& state) {
    auto cfg = small_experiment();
    cfg.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}
BENCHMARK(BM_ExperimentParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
