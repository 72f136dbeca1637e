// Serial reference path against the OpenMP path for each parallel kernel.
// Pass the execution mode as the benchmark argument: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "siot/aggregate.hpp"
#include "siot/features.hpp"
#include "siot/forest.hpp"
#include "siot/kmeans.hpp"
#include "siot/sim.hpp"

using namespace siot;

namespace {

struct Fixture {
  SimTrace trace;
  FeatureTable table;
  std::vector<Point> points;
  std::vector<TrustLabel> labels;
  LabelTable direct;

  Fixture() : trace(generate_trace(SimConfig{})) {
    table = compute_features(trace.graph, Execution::Serial);
    for (const auto& r : table.rows) points.push_back(r.as_array());
    labels = label_clusters(kmeans_best_of(points, 3, 1));
    for (std::size_t k = 0; k < table.pairs.size(); ++k) direct[table.pairs[k]] = labels[k];
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_ComputeFeatures(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(compute_features(f.trace.graph, mode(state)));
}

void BM_AssignNearest(benchmark::State& state) {
  const auto& f = fixture();
  const std::vector<Point> centroids = {{0.1, 0.2, 0.3, 0.4}, {0.9, 0.8, 0.7, 0.6}, {0.5, 0.5, 0.5, 0.5},
                                        {0.2, 0.7, 0.1, 0.9}, {0.6, 0.1, 0.8, 0.3}};
  std::vector<std::size_t> assignment(f.points.size());
  std::vector<double> distance(f.points.size());
  for (auto _ : state) {
    assign_nearest(f.points, centroids, assignment, distance, mode(state));
    benchmark::DoNotOptimize(assignment.data());
  }
}

void BM_FitForest(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(f.points, f.labels, ForestParams{}, 1, mode(state)));
}

void BM_PredictAll(benchmark::State& state) {
  const auto& f = fixture();
  const auto model = fit_forest(f.points, f.labels, ForestParams{}, 1, Execution::Parallel);
  for (auto _ : state) benchmark::DoNotOptimize(predict_all(model, f.points, mode(state)));
}

void BM_EstimateAll(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_all(f.trace.graph, f.direct, AggregationConfig{}, mode(state)));
}

}  // namespace

BENCHMARK(BM_ComputeFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearest)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FitForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
