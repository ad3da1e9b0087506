#include "scmp/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scmp {

std::vector<GraphGrad> batch_grads_serial(const CompatibilityModel& model,
                                          std::span<const SetGraph> graphs,
                                          NormMode mode) {
  std::vector<GraphGrad> out(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    GradOut g = model.loss_and_grads(graphs[i], mode);
    out[i] = GraphGrad{g.loss, std::move(g.grads), std::move(g.norm_stats)};
  }
  return out;
}

std::vector<GraphGrad> batch_grads_parallel(const CompatibilityModel& model,
                                            std::span<const SetGraph> graphs,
                                            NormMode mode, int workers) {
  std::vector<GraphGrad> out(graphs.size());
#ifdef _OPENMP
  #pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(graphs.size()); ++i) {
    GradOut g = model.loss_and_grads(graphs[static_cast<std::size_t>(i)], mode);
    out[static_cast<std::size_t>(i)] =
        GraphGrad{g.loss, std::move(g.grads), std::move(g.norm_stats)};
  }
#else
  (void)workers;
  out = batch_grads_serial(model, graphs, mode);
#endif
  return out;
}

std::unordered_map<std::string, std::vector<double>> reduce_grads(
    const std::vector<GraphGrad>& per_graph) {
  std::unordered_map<std::string, std::vector<double>> total;
  const double inv = 1.0 / static_cast<double>(per_graph.size());
  for (const GraphGrad& g : per_graph) {
    for (const auto& [name, vec] : g.grads) {
      std::vector<double>& acc = total[name];
      if (acc.empty()) acc.assign(vec.size(), 0.0);
      for (std::size_t i = 0; i < vec.size(); ++i) acc[i] += vec[i];
    }
  }
  for (auto& [name, vec] : total)
    for (double& v : vec) v *= inv;
  return total;
}

static std::vector<SetGraph> graphs_of(const std::vector<EnsembleSample>& samples,
                                       const EmbeddingTable& table) {
  std::vector<SetGraph> out;
  out.reserve(samples.size());
  for (const EnsembleSample& s : samples)
    out.push_back(graph_from_items(s.item_ids, table, s.label, s.provenance));
  return out;
}

double evaluate_auc(const CompatibilityModel& model,
                    const std::vector<EnsembleSample>& samples,
                    const EmbeddingTable& table, bool pairwise, int workers) {
  std::vector<ScoredExample> scored(samples.size());
#ifdef _OPENMP
  #pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples.size()); ++i) {
    const EnsembleSample& s = samples[static_cast<std::size_t>(i)];
    SetGraph g = graph_from_items(s.item_ids, table, s.label);
    ScoreOut so = pairwise ? model.score_pairwise_average(g) : model.score(g);
    scored[static_cast<std::size_t>(i)] = ScoredExample{so.ranking, s.label};
  }
  return auc(scored);
}

double evaluate_fitb(const CompatibilityModel& model,
                     const std::vector<FitbQuestion>& questions,
                     const EmbeddingTable& table, bool pairwise) {
  auto scorer = [&](const std::vector<std::string>& items) {
    SetGraph g = graph_from_items(items, table, std::nullopt);
    ScoreOut so = pairwise ? model.score_pairwise_average(g) : model.score(g);
    return so.ranking;
  };
  return fitb_accuracy(questions, scorer);
}

TrainResult train_model(CompatibilityModel& model,
                        const std::vector<EnsembleSample>& train_samples,
                        const std::vector<EnsembleSample>& val_samples,
                        const EmbeddingTable& table, const TrainOptions& opts) {
  TrainResult result;
  std::vector<SetGraph> graphs = graphs_of(train_samples, table);
  std::mt19937_64 rng(opts.seed);

  std::vector<Param> best_params;
  NormState best_norm = model.norm_state();
  std::int64_t best_step = 0;

  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      std::vector<SetGraph> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(graphs[order[i]]);

      std::vector<GraphGrad> per_graph =
          opts.workers > 1
              ? batch_grads_parallel(model, batch, NormMode::kTrain, opts.workers)
              : batch_grads_serial(model, batch, NormMode::kTrain);

      for (const GraphGrad& g : per_graph) {
        loss_sum += g.loss;
        ++seen;
        if (!std::isfinite(g.loss)) {
          result.diverged = true;
          return result;
        }
      }
      // running moments fold in graph order, independent of worker count
      for (const GraphGrad& g : per_graph)
        if (!g.norm_stats.mean.empty())
          model.norm_state().update(g.norm_stats.mean, g.norm_stats.var);

      auto grads = reduce_grads(per_graph);
      model.registry().adam_step(grads, opts.lr, opts.beta1, opts.beta2);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, seen));
    stats.val_auc = val_samples.empty()
                        ? 0.0
                        : evaluate_auc(model, val_samples, table, false, opts.workers);
    result.epochs.push_back(stats);

    if (result.best_epoch < 0 || stats.val_auc > result.best_val_auc) {
      result.best_epoch = epoch;
      result.best_val_auc = stats.val_auc;
      best_params = model.registry().params();
      best_norm = model.norm_state();
      best_step = model.registry().step();
    }
  }

  if (result.best_epoch >= 0 && !val_samples.empty()) {
    model.registry().params() = best_params;
    model.registry().set_step(best_step);
    model.norm_state() = best_norm;
  }
  return result;
}

}  // namespace scmp
