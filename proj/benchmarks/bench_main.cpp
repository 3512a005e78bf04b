#include "pda/calibration.hpp"
#include "pda/knn.hpp"
#include "pda/pruning.hpp"
#include "pda/random.hpp"
#include "pda/reduction.hpp"

#include <benchmark/benchmark.h>

using namespace pda;

namespace {

FeatureSet gaussian(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    FeatureSet s(d);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.normal(0.0, 1.0);
        s.push_back(std::span<const double>(row));
    }
    return s;
}

ReferenceSet random_reference(std::size_t n) {
    Rng rng(1);
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {rng.normal(), rng.normal()};
    return ReferenceSet(std::move(pts), "bench");
}

void BM_KnnDistance(benchmark::State& state) {
    const auto ref = random_reference(static_cast<std::size_t>(state.range(0)));
    const KnnConfig cfg{20};
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(knn_distance(ref, Point2{x, 0.5}, cfg));
        x += 1e-3;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KnnDistance)->Arg(300)->Arg(3000)->Arg(30000);

void BM_Percentile(benchmark::State& state) {
    Rng rng(2);
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (auto& x : v) x = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(percentile(v, 95.0));
}
BENCHMARK(BM_Percentile)->Arg(1000)->Arg(100000);

void BM_PruneSet(benchmark::State& state) {
    const auto x = gaussian(3, 1000, 512);
    for (auto _ : state) benchmark::DoNotOptimize(prune_set(x, PruneConfig{}));
}
BENCHMARK(BM_PruneSet)->Unit(benchmark::kMillisecond);

void BM_Affinities(benchmark::State& state) {
    const auto x = gaussian(4, static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(pairwise_affinities(x, 30.0));
}
BENCHMARK(BM_Affinities)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TsneFit(benchmark::State& state) {
    const auto x = gaussian(5, static_cast<std::size_t>(state.range(0)), 16);
    TsneConfig cfg;
    cfg.iterations = 250;
    for (auto _ : state) benchmark::DoNotOptimize(fit_tsne(x, cfg));
}
BENCHMARK(BM_TsneFit)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_EmbedOutOfSample(benchmark::State& state) {
    const auto x = gaussian(6, 500, 16);
    TsneConfig cfg;
    cfg.iterations = 300;
    cfg.out_of_sample = static_cast<OutOfSampleMode>(state.range(0));
    const auto model = fit_tsne(x, cfg);
    const auto probe = gaussian(7, 64, 16);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_out_of_sample(model, probe.row(i++ % probe.size())));
    }
    state.SetLabel(to_string(cfg.out_of_sample));
}
BENCHMARK(BM_EmbedOutOfSample)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
