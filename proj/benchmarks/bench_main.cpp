#include <benchmark/benchmark.h>

#include <vector>

#include "l3det/detector.hpp"
#include "l3det/pipeline.hpp"
#include "l3det/preprocess.hpp"
#include "l3det/prompting.hpp"
#include "l3det/rng.hpp"
#include "l3det/stats.hpp"
#include "support.hpp"

using namespace l3det;

namespace {

const Trace& trace() {
    static const Trace t = l3det::test::reference_trace();
    return t;
}

void BM_BuildWindows(benchmark::State& state) {
    const WindowConfig cfg(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_windows(trace(), cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(trace().size()));
}
BENCHMARK(BM_BuildWindows)->Arg(1)->Arg(5)->Arg(10);

void BM_OraclePipeline(benchmark::State& state) {
    TraceStore store;
    load(store, trace());
    PipelineConfig cfg;
    cfg.window = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        OracleDetector det;
        benchmark::DoNotOptimize(run_pipeline(store, det, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(trace().size()));
}
BENCHMARK(BM_OraclePipeline)->Arg(1)->Arg(10);

void BM_BuildPrompt(benchmark::State& state) {
    const auto windows = build_windows(trace(), WindowConfig(5));
    const auto mode = static_cast<PromptMode>(state.range(0));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_prompt(windows[i], default_blind_dos_description(), mode));
        i = (i + 1) % windows.size();
    }
}
BENCHMARK(BM_BuildPrompt)->Arg(0)->Arg(1)->Arg(2);

void BM_Lint(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(lint(default_blind_dos_description()));
}
BENCHMARK(BM_Lint);

void BM_KendallTau(benchmark::State& state) {
    Rng rng(7);
    std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = static_cast<double>(uniform_below(rng, 50));
        ys[i] = static_cast<double>(uniform_below(rng, 50));
    }
    for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(xs, ys));
}
BENCHMARK(BM_KendallTau)->Range(16, 4096);

}  // namespace

BENCHMARK_MAIN();
