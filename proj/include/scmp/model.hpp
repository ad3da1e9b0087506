#ifndef SCMP_MODEL_HPP
#define SCMP_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scmp/nn.hpp"
#include "scmp/tensor.hpp"

namespace scmp {

enum class Variant { kModelI, kModelII };

struct ModelConfig {
  Variant variant = Variant::kModelI;
  int embed_dim = 32;  // L, node state width
  int msg_dim = 32;    // M
  int edge_dim = 32;   // J; forced to embed_dim for Model I (abs-diff edges)
  int steps = 3;       // K
  int mlp_depth = 3;   // Q, Model II only
  double margin = 50.0;
  bool normalize = true;  // Model I score/loss normalization

  void validate() const;
};

// A furniture set as a complete graph: N items, their initial node states,
// optional binary compatibility label. N >= 2 always.
struct SetGraph {
  std::string set_id;
  std::vector<std::string> item_ids;
  std::vector<Tensor> init_states;
  std::optional<int> label;

  int num_nodes() const { return static_cast<int>(init_states.size()); }
};

SetGraph make_graph(std::string set_id, std::vector<std::string> item_ids,
                    std::vector<Tensor> init_states, std::optional<int> label);

using EdgeFn = std::function<Tensor(Tape&, const Tensor&, const Tensor&)>;

// |h_q - h_i|, symmetric.
Tensor edge_absdiff(Tape& tape, const Tensor& h_q, const Tensor& h_i);

// ReLU(W_e (h_i || h_j) + b_e); directed, evaluated per ordered pair.
Tensor edge_learned(Tape& tape, const Tensor& h_i, const Tensor& h_j,
                    const Tensor& w_e, const Tensor& b_e);

// Mean over the N-1 neighbors q of ReLU(W_m (h_q || edge(h_q, h_i)) + b_m).
Tensor aggregate_message(Tape& tape, int i, const std::vector<Tensor>& states,
                         const EdgeFn& edge_fn, const Tensor& w_m, const Tensor& b_m);

// Scalar >= 0; y=1 pulls states to their centroid, y=0 pushes them beyond
// margin m (squared-distance hinge).
Tensor loss_generalized_contrastive(Tape& tape, const std::vector<Tensor>& states,
                                    int y, double margin);

// Per-graph outputs for scoring/evaluation. `ranking` is the statistic used
// for AUC and FITB ordering: -r for Model I, the sigmoid score for Model II.
struct ScoreOut {
  double score = 0.0;      // reported compatibility in [0,1]
  double raw_stat = 0.0;   // Model I: r (mean squared centroid distance); Model II: logit
  double sigma_raw = 0.0;  // Model I: literal sigmoid(r) from the score map
  double ranking = 0.0;
};

struct GradOut {
  double loss = 0.0;
  std::unordered_map<std::string, std::vector<double>> grads;
  NormBatchStats norm_stats;  // Model I train mode only
  // smallest |input| any relu/abs saw this pass; finite-difference checks
  // resample configurations where this is below their step-safety margin
  double min_kink_distance = 0.0;
};

// Both compatibility models behind one interface. Parameters are built from
// a seed at construction; scoring is const and thread-safe given exclusive
// tapes per thread.
class CompatibilityModel {
public:
  CompatibilityModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return reg_; }
  const ParamRegistry& registry() const { return reg_; }
  NormState& norm_state() { return norm_; }
  const NormState& norm_state() const { return norm_; }

  ScoreOut score(const SetGraph& graph) const;  // eval-mode forward

  // Forward + backward of the variant's loss. Train mode uses in-batch
  // normalization statistics (reported via norm_stats); the caller applies
  // the running-moment update.
  GradOut loss_and_grads(const SetGraph& graph, NormMode mode) const;

  // As above but also returns d(loss)/d(initial embeddings), for gradient
  // checking the full path.
  GradOut loss_and_grads_with_inputs(const SetGraph& graph, NormMode mode,
                                     std::vector<std::vector<double>>* input_grads) const;

  // Mean of the full-model score over all C(N,2) two-item subgraphs.
  ScoreOut score_pairwise_average(const SetGraph& graph) const;

  const GruCell& gru() const { return gru_; }
  const MlpHead& mlp() const { return mlp_; }

private:
  ModelConfig cfg_;
  ParamRegistry reg_;
  NormState norm_;
  GruCell gru_;
  MlpHead mlp_;

  std::vector<Tensor> propagate(Tape& tape, TapeBinding& bind,
                                const std::vector<Tensor>& init) const;
  EdgeFn edge_fn(TapeBinding& bind) const;

  friend std::vector<Tensor> model_propagate_for_test(const CompatibilityModel&,
                                                      Tape&, TapeBinding&,
                                                      const std::vector<Tensor>&);
};

// Test hook: run message passing only.
std::vector<Tensor> model_propagate_for_test(const CompatibilityModel& m, Tape& tape,
                                             TapeBinding& bind,
                                             const std::vector<Tensor>& init);

}  // namespace scmp

#endif
