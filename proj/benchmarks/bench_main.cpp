#include <benchmark/benchmark.h>

#include <numeric>

#include <wqcascade/cascade.hpp>
#include <wqcascade/forest.hpp>
#include <wqcascade/splits.hpp>
#include <wqcascade/synth.hpp>

using namespace wqcascade;

namespace {

const Split& data() {
    static const Split split =
        apply_split(remove_outliers(generate_dataset(SynthConfig::calibrated())), SplitSpec::set1());
    return split;
}

void BM_BestSplit(benchmark::State& state) {
    const auto labeled = label(data().train, 60, default_features());
    std::vector<std::size_t> rows(labeled.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<std::size_t> features(labeled.cols());
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (auto _ : state) benchmark::DoNotOptimize(best_split(labeled, rows, features));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}
BENCHMARK(BM_BestSplit);

void BM_FitForest(benchmark::State& state) {
    const auto labeled = label(data().train, 250, default_features());
    ForestParams p;
    p.n_estimators = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(fit_forest(labeled, p, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitForest)->Arg(100)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_FitCascade(benchmark::State& state) {
    ForestParams p;
    p.n_estimators = 100;
    for (auto _ : state) benchmark::DoNotOptimize(fit_cascade(data().train, p, ThresholdPolicy::uniform(0.8)));
}
BENCHMARK(BM_FitCascade)->Unit(benchmark::kMillisecond);

void BM_ClassifyCascade(benchmark::State& state) {
    ForestParams p;
    p.n_estimators = 800;
    const auto model = fit_cascade(data().train, p, ThresholdPolicy::uniform(0.8), 6, default_features(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(classify_dataset(model, data().test, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data().test.size()));
}
BENCHMARK(BM_ClassifyCascade)->Unit(benchmark::kMillisecond);

void BM_GenerateDataset(benchmark::State& state) {
    const auto cfg = SynthConfig::calibrated();
    for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(cfg));
}
BENCHMARK(BM_GenerateDataset)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
