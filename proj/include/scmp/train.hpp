#ifndef SCMP_TRAIN_HPP
#define SCMP_TRAIN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scmp/data.hpp"
#include "scmp/eval.hpp"
#include "scmp/model.hpp"

namespace scmp {

// Per-graph forward/backward results, one slot per input graph.
struct GraphGrad {
  double loss = 0.0;
  std::unordered_map<std::string, std::vector<double>> grads;
  NormBatchStats norm_stats;
};

// Serial reference kernel: one tape per graph, in order.
std::vector<GraphGrad> batch_grads_serial(const CompatibilityModel& model,
                                          std::span<const SetGraph> graphs,
                                          NormMode mode);

// OpenMP kernel. Each graph gets its own tape; results land in per-graph
// slots, so downstream reductions are independent of thread count.
std::vector<GraphGrad> batch_grads_parallel(const CompatibilityModel& model,
                                            std::span<const SetGraph> graphs,
                                            NormMode mode, int workers);

// Ordered reduction: mean gradient over the batch, keyed like the registry.
std::unordered_map<std::string, std::vector<double>> reduce_grads(
    const std::vector<GraphGrad>& per_graph);

struct TrainOptions {
  double lr = 4e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 60;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int workers = 1;  // <=1 runs the serial reference kernel
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_auc = 0.0;
  bool diverged = false;
};

// Trains in place; keeps the parameter snapshot with the highest validation
// AUC and restores it before returning. Sets `diverged` on a NaN loss.
TrainResult train_model(CompatibilityModel& model,
                        const std::vector<EnsembleSample>& train_samples,
                        const std::vector<EnsembleSample>& val_samples,
                        const EmbeddingTable& table, const TrainOptions& opts);

// AUC of the model's ranking statistic over labeled samples.
double evaluate_auc(const CompatibilityModel& model,
                    const std::vector<EnsembleSample>& samples,
                    const EmbeddingTable& table, bool pairwise = false,
                    int workers = 1);

double evaluate_fitb(const CompatibilityModel& model,
                     const std::vector<FitbQuestion>& questions,
                     const EmbeddingTable& table, bool pairwise = false);

}  // namespace scmp

#endif
