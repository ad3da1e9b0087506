// Compares the serial reference kernel against the OpenMP kernel on a batch
// of synthetic training graphs.
#include <benchmark/benchmark.h>

#include "scmp/data.hpp"
#include "scmp/train.hpp"

namespace {

struct Fixture {
  scmp::EmbeddingTable table;
  std::vector<scmp::SetGraph> graphs;
  scmp::CompatibilityModel model;

  explicit Fixture(scmp::Variant variant)
      : table(scmp::generate_synthetic(4, 50, 16, 0.05, 11)),
        model(make_config(variant), 7) {
    auto samples = scmp::sample_style_ensembles(table, 64, 3, 6, 13);
    for (const auto& s : samples)
      graphs.push_back(scmp::graph_from_items(s.item_ids, table, s.label));
  }

  static scmp::ModelConfig make_config(scmp::Variant variant) {
    scmp::ModelConfig cfg;
    cfg.variant = variant;
    cfg.embed_dim = cfg.msg_dim = cfg.edge_dim = 16;
    cfg.steps = 3;
    return cfg;
  }
};

void bench_serial(benchmark::State& state) {
  Fixture f(scmp::Variant::kModelI);
  for (auto _ : state) {
    auto out = scmp::batch_grads_serial(f.model, f.graphs, scmp::NormMode::kTrain);
    benchmark::DoNotOptimize(out);
  }
}

void bench_parallel(benchmark::State& state) {
  Fixture f(scmp::Variant::kModelI);
  int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = scmp::batch_grads_parallel(f.model, f.graphs, scmp::NormMode::kTrain, workers);
    benchmark::DoNotOptimize(out);
  }
}

}  // namespace

BENCHMARK(bench_serial);
BENCHMARK(bench_parallel)->Arg(2)->Arg(4)->Arg(8);
BENCHMARK_MAIN();
