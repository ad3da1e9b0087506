#include "scmp/model.hpp"

#include <cmath>
#include <stdexcept>

namespace scmp {

static double sigmoid_val(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void ModelConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("config: steps K must be >= 1");
  if (variant == Variant::kModelI && margin <= 0.0)
    throw std::invalid_argument("config: margin must be > 0 for Model I");
  if (embed_dim < 1 || msg_dim < 1 || edge_dim < 1)
    throw std::invalid_argument("config: dims must be positive");
  if (variant == Variant::kModelII && mlp_depth < 1)
    throw std::invalid_argument("config: MLP depth Q must be >= 1");
}

SetGraph make_graph(std::string set_id, std::vector<std::string> item_ids,
                    std::vector<Tensor> init_states, std::optional<int> label) {
  if (init_states.size() < 2)
    throw std::invalid_argument("set graph needs at least 2 items, got " +
                                std::to_string(init_states.size()));
  if (item_ids.size() != init_states.size())
    throw std::invalid_argument("item id / state count mismatch");
  return SetGraph{std::move(set_id), std::move(item_ids), std::move(init_states), label};
}

Tensor edge_absdiff(Tape& tape, const Tensor& h_q, const Tensor& h_i) {
  return tape.abs(tape.sub(h_q, h_i));
}

Tensor edge_learned(Tape& tape, const Tensor& h_i, const Tensor& h_j,
                    const Tensor& w_e, const Tensor& b_e) {
  return tape.relu(tape.add(tape.matmul(w_e, tape.concat(h_i, h_j)), b_e));
}

Tensor aggregate_message(Tape& tape, int i, const std::vector<Tensor>& states,
                         const EdgeFn& edge_fn, const Tensor& w_m, const Tensor& b_m) {
  const int n = static_cast<int>(states.size());
  if (n < 2) throw std::invalid_argument("aggregate_message: need N >= 2 nodes");
  Tensor acc;
  bool first = true;
  for (int q = 0; q < n; ++q) {
    if (q == i) continue;
    Tensor e = edge_fn(tape, states[q], states[i]);
    Tensor term = tape.relu(tape.add(tape.matmul(w_m, tape.concat(states[q], e)), b_m));
    acc = first ? term : tape.add(acc, term);
    first = false;
  }
  return tape.scale(acc, 1.0 / (n - 1));
}

static Tensor centroid_of(Tape& tape, const std::vector<Tensor>& states) {
  Tensor acc = states[0];
  for (std::size_t i = 1; i < states.size(); ++i) acc = tape.add(acc, states[i]);
  return tape.scale(acc, 1.0 / static_cast<double>(states.size()));
}

Tensor loss_generalized_contrastive(Tape& tape, const std::vector<Tensor>& states,
                                    int y, double margin) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1");
  if (margin <= 0.0) throw std::invalid_argument("margin must be > 0");
  Tensor c = centroid_of(tape, states);
  Tensor acc;
  bool first = true;
  for (const Tensor& h : states) {
    Tensor d2 = tape.sq_l2_norm(tape.sub(h, c));
    Tensor term;
    if (y == 1) {
      term = d2;
    } else {
      // max(0, m^2 - d^2), hinge gradient 0 at the boundary
      term = tape.relu(tape.add_scalar(tape.scale(d2, -1.0), margin * margin));
    }
    acc = first ? term : tape.add(acc, term);
    first = false;
  }
  return tape.scale(acc, 1.0 / static_cast<double>(states.size()));
}

CompatibilityModel::CompatibilityModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg), norm_(cfg.embed_dim) {
  cfg_.validate();
  if (cfg_.variant == Variant::kModelI) cfg_.edge_dim = cfg_.embed_dim;
  std::mt19937_64 seeds(seed);
  gru_ = GruCell{cfg_.msg_dim, cfg_.embed_dim, "gru"};
  gru_.register_params(reg_, seeds);
  reg_.add("msg.W", xavier_init({cfg_.msg_dim, cfg_.embed_dim + cfg_.edge_dim}, seeds()));
  reg_.add("msg.b", Tensor::zeros({cfg_.msg_dim}));
  if (cfg_.variant == Variant::kModelII) {
    reg_.add("edge.W", xavier_init({cfg_.edge_dim, 2 * cfg_.embed_dim}, seeds()));
    reg_.add("edge.b", Tensor::zeros({cfg_.edge_dim}));
    mlp_ = MlpHead::make(cfg_.embed_dim, cfg_.mlp_depth, "mlp");
    mlp_.register_params(reg_, seeds);
  }
  if (cfg_.variant == Variant::kModelI && cfg_.normalize)
    register_norm_params(reg_, cfg_.embed_dim, "norm");
}

EdgeFn CompatibilityModel::edge_fn(TapeBinding& bind) const {
  if (cfg_.variant == Variant::kModelI)
    return [](Tape& t, const Tensor& a, const Tensor& b) { return edge_absdiff(t, a, b); };
  return [&bind](Tape& t, const Tensor& a, const Tensor& b) {
    return edge_learned(t, a, b, bind["edge.W"], bind["edge.b"]);
  };
}

std::vector<Tensor> CompatibilityModel::propagate(Tape& tape, TapeBinding& bind,
                                                  const std::vector<Tensor>& init) const {
  EdgeFn efn = edge_fn(bind);
  const Tensor& w_m = bind["msg.W"];
  const Tensor& b_m = bind["msg.b"];
  std::vector<Tensor> states = init;
  for (int k = 0; k < cfg_.steps; ++k) {
    // synchronous update: all step-k messages read step-(k-1) states
    std::vector<Tensor> msgs;
    msgs.reserve(states.size());
    for (int i = 0; i < static_cast<int>(states.size()); ++i)
      msgs.push_back(aggregate_message(tape, i, states, efn, w_m, b_m));
    std::vector<Tensor> next;
    next.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
      next.push_back(gru_.step(tape, bind, states[i], msgs[i]));
    states = std::move(next);
  }
  return states;
}

std::vector<Tensor> model_propagate_for_test(const CompatibilityModel& m, Tape& tape,
                                             TapeBinding& bind,
                                             const std::vector<Tensor>& init) {
  return m.propagate(tape, bind, init);
}

ScoreOut CompatibilityModel::score(const SetGraph& graph) const {
  if (graph.num_nodes() < 2)
    throw std::invalid_argument("score: graph must have N >= 2 nodes");
  Tape tape;
  TapeBinding bind(tape, reg_);
  std::vector<Tensor> init;
  init.reserve(graph.init_states.size());
  for (const Tensor& e : graph.init_states) init.push_back(tape.leaf(e));
  std::vector<Tensor> finals = propagate(tape, bind, init);

  ScoreOut out;
  if (cfg_.variant == Variant::kModelI) {
    std::vector<Tensor> states = finals;
    if (cfg_.normalize)
      states = normalize_states(tape, bind, finals, "norm", norm_, NormMode::kEval);
    Tensor c = centroid_of(tape, states);
    double r = 0.0;
    for (const Tensor& h : states) {
      Tensor d2 = tape.sq_l2_norm(tape.sub(h, c));
      r += d2.item();
    }
    r /= static_cast<double>(states.size());
    out.raw_stat = r;
    out.sigma_raw = sigmoid_val(r);
    out.score = 1.0 - out.sigma_raw;  // tighter clusters score higher
    out.ranking = -r;
  } else {
    Tensor mean = centroid_of(tape, finals);
    Tensor logit = mlp_.forward(tape, bind, mean);
    out.raw_stat = logit.item();
    out.score = sigmoid_val(out.raw_stat);
    out.sigma_raw = out.score;
    out.ranking = out.score;
  }
  return out;
}

GradOut CompatibilityModel::loss_and_grads(const SetGraph& graph, NormMode mode) const {
  return loss_and_grads_with_inputs(graph, mode, nullptr);
}

GradOut CompatibilityModel::loss_and_grads_with_inputs(
    const SetGraph& graph, NormMode mode,
    std::vector<std::vector<double>>* input_grads) const {
  if (!graph.label)
    throw std::invalid_argument("loss: graph has no label");
  if (graph.num_nodes() < 2)
    throw std::invalid_argument("loss: graph must have N >= 2 nodes");
  const int y = *graph.label;
  Tape tape;
  TapeBinding bind(tape, reg_);
  std::vector<Tensor> init;
  init.reserve(graph.init_states.size());
  for (const Tensor& e : graph.init_states) init.push_back(tape.leaf(e));
  std::vector<Tensor> finals = propagate(tape, bind, init);

  GradOut out;
  Tensor loss;
  if (cfg_.variant == Variant::kModelI) {
    std::vector<Tensor> states = finals;
    if (cfg_.normalize)
      states = normalize_states(tape, bind, finals, "norm", norm_, mode,
                                mode == NormMode::kTrain ? &out.norm_stats : nullptr);
    loss = loss_generalized_contrastive(tape, states, y, cfg_.margin);
  } else {
    Tensor mean = centroid_of(tape, finals);
    Tensor logit = mlp_.forward(tape, bind, mean);
    loss = tape.bce_with_logit(logit, static_cast<double>(y));
  }
  out.loss = loss.item();
  out.min_kink_distance = tape.min_kink_distance();
  GradientMap g = tape.backward(loss);
  out.grads = bind.collect(g);
  if (input_grads) {
    input_grads->clear();
    for (const Tensor& leaf : init) input_grads->push_back(g.at(leaf));
  }
  return out;
}

ScoreOut CompatibilityModel::score_pairwise_average(const SetGraph& graph) const {
  const int n = graph.num_nodes();
  if (n < 2) throw std::invalid_argument("pairwise score: need N >= 2");
  ScoreOut acc;
  int pairs = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      SetGraph pair = make_graph(graph.set_id + ":pair",
                                 {graph.item_ids[a], graph.item_ids[b]},
                                 {graph.init_states[a], graph.init_states[b]},
                                 graph.label);
      ScoreOut s = score(pair);
      acc.score += s.score;
      acc.raw_stat += s.raw_stat;
      acc.sigma_raw += s.sigma_raw;
      acc.ranking += s.ranking;
      ++pairs;
    }
  acc.score /= pairs;
  acc.raw_stat /= pairs;
  acc.sigma_raw /= pairs;
  acc.ranking /= pairs;
  return acc;
}

}  // namespace scmp
