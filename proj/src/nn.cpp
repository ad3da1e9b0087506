#include "scmp/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace scmp {

Tensor xavier_init(const std::vector<int>& shape, std::uint64_t seed) {
  if (shape.size() != 2)
    throw shape_error("xavier_init: expected 2-D shape, got " + shape_str(shape));
  int fan_out = shape[0], fan_in = shape[1];
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.data) v = dist(rng);
  return t;
}

Tensor& ParamRegistry::add(const std::string& name, Tensor value) {
  if (index_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back(Param{name, std::move(value), {}, {}});
  Param& p = params_.back();
  p.adam_m.assign(p.value.size(), 0.0);
  p.adam_v.assign(p.value.size(), 0.0);
  return p.value;
}

Tensor& ParamRegistry::value(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no such parameter: " + name);
  return params_[it->second].value;
}

const Tensor& ParamRegistry::value(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no such parameter: " + name);
  return params_[it->second].value;
}

bool ParamRegistry::contains(const std::string& name) const {
  return index_.count(name) > 0;
}

void ParamRegistry::adam_step(
    const std::unordered_map<std::string, std::vector<double>>& grads, double lr,
    double beta1, double beta2, double eps) {
  for (const Param& p : params_) {
    auto it = grads.find(p.name);
    if (it == grads.end())
      throw std::invalid_argument("adam_step: missing gradient for " + p.name);
    if (it->second.size() != p.value.size())
      throw std::invalid_argument("adam_step: gradient size mismatch for " + p.name);
  }
  ++step_;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (Param& p : params_) {
    const std::vector<double>& g = grads.at(p.name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      p.adam_m[i] = beta1 * p.adam_m[i] + (1.0 - beta1) * g[i];
      p.adam_v[i] = beta2 * p.adam_v[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = p.adam_m[i] / bc1;
      double vhat = p.adam_v[i] / bc2;
      p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

const Tensor& TapeBinding::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  auto [ins, ok] = bound_.emplace(name, tape_.leaf(reg_.value(name)));
  return ins->second;
}

std::unordered_map<std::string, std::vector<double>> TapeBinding::collect(
    const GradientMap& g) const {
  std::unordered_map<std::string, std::vector<double>> out;
  for (const auto& [name, tensor] : bound_) out[name] = g.at(tensor);
  // parameters never touched this pass still need (zero) gradients
  for (const Param& p : reg_.params())
    if (!out.count(p.name)) out[p.name] = std::vector<double>(p.value.size(), 0.0);
  return out;
}

void GruCell::register_params(ParamRegistry& reg, std::mt19937_64& seeds) const {
  const char* gates[] = {"z", "r", "h"};
  for (const char* gt : gates) {
    reg.add(prefix + ".W" + gt, xavier_init({hidden_size, input_size}, seeds()));
    reg.add(prefix + ".U" + gt, xavier_init({hidden_size, hidden_size}, seeds()));
    reg.add(prefix + ".b" + gt, Tensor::zeros({hidden_size}));
  }
}

Tensor GruCell::step(Tape& tape, TapeBinding& bind, const Tensor& h_prev,
                     const Tensor& msg) const {
  if (h_prev.shape != std::vector<int>{hidden_size})
    throw shape_error("gru_step: h_prev shape " + shape_str(h_prev.shape) +
                      " does not match hidden size " + std::to_string(hidden_size));
  if (msg.shape != std::vector<int>{input_size})
    throw shape_error("gru_step: message shape " + shape_str(msg.shape) +
                      " does not match input size " + std::to_string(input_size));
  auto gate = [&](const char* gt, const Tensor& h_in) {
    Tensor a = tape.matmul(bind[prefix + ".W" + gt], msg);
    Tensor b = tape.matmul(bind[prefix + ".U" + gt], h_in);
    return tape.add(tape.add(a, b), bind[prefix + ".b" + gt]);
  };
  Tensor z = tape.sigmoid(gate("z", h_prev));
  Tensor r = tape.sigmoid(gate("r", h_prev));
  Tensor cand = tape.tanh(gate("h", tape.mul(r, h_prev)));
  Tensor one_minus_z = tape.add_scalar(tape.scale(z, -1.0), 1.0);
  return tape.add(tape.mul(one_minus_z, h_prev), tape.mul(z, cand));
}

MlpHead MlpHead::make(int input_dim, int depth, const std::string& prefix) {
  if (depth < 1) throw std::invalid_argument("MlpHead: depth must be >= 1");
  MlpHead head;
  head.prefix = prefix;
  head.widths.push_back(input_dim);
  int w = input_dim;
  for (int i = 0; i < depth - 1; ++i) head.widths.push_back(w);
  head.widths.push_back(1);
  return head;
}

void MlpHead::register_params(ParamRegistry& reg, std::mt19937_64& seeds) const {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    std::string li = std::to_string(i);
    reg.add(prefix + ".W" + li, xavier_init({widths[i + 1], widths[i]}, seeds()));
    reg.add(prefix + ".b" + li, Tensor::zeros({widths[i + 1]}));
  }
}

Tensor MlpHead::forward(Tape& tape, TapeBinding& bind, const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    std::string li = std::to_string(i);
    h = tape.add(tape.matmul(bind[prefix + ".W" + li], h), bind[prefix + ".b" + li]);
    if (i + 2 < widths.size()) h = tape.relu(h);
  }
  return h;
}

void NormState::update(const std::vector<double>& batch_mean,
                       const std::vector<double>& batch_var) {
  if (!initialized) {
    running_mean = batch_mean;
    running_var = batch_var;
    initialized = true;
    return;
  }
  for (std::size_t i = 0; i < running_mean.size(); ++i) {
    running_mean[i] = momentum * running_mean[i] + (1.0 - momentum) * batch_mean[i];
    running_var[i] = momentum * running_var[i] + (1.0 - momentum) * batch_var[i];
  }
}

void register_norm_params(ParamRegistry& reg, int dim, const std::string& prefix) {
  Tensor gamma = Tensor::zeros({dim});
  for (double& v : gamma.data) v = 1.0;
  reg.add(prefix + ".gamma", std::move(gamma));
  reg.add(prefix + ".beta", Tensor::zeros({dim}));
}

std::vector<Tensor> normalize_states(Tape& tape, TapeBinding& bind,
                                     const std::vector<Tensor>& states,
                                     const std::string& prefix,
                                     const NormState& norm, NormMode mode,
                                     NormBatchStats* stats) {
  if (states.empty()) throw std::invalid_argument("normalize_states: no states");
  const Tensor& gamma = bind[prefix + ".gamma"];
  const Tensor& beta = bind[prefix + ".beta"];
  std::vector<Tensor> out;
  out.reserve(states.size());

  if (mode == NormMode::kEval) {
    Tensor mean = tape.leaf({norm.dim}, norm.running_mean);
    std::vector<double> denom(norm.running_var.size());
    for (std::size_t i = 0; i < denom.size(); ++i)
      denom[i] = std::sqrt(norm.running_var[i] + norm.eps);
    Tensor std_t = tape.leaf({norm.dim}, denom);
    for (const Tensor& s : states) {
      Tensor z = tape.div(tape.sub(s, mean), std_t);
      out.push_back(tape.add(tape.mul(gamma, z), beta));
    }
    return out;
  }

  const double n = static_cast<double>(states.size());
  Tensor acc = states[0];
  for (std::size_t i = 1; i < states.size(); ++i) acc = tape.add(acc, states[i]);
  Tensor mean = tape.scale(acc, 1.0 / n);
  Tensor var_acc = tape.mul(tape.sub(states[0], mean), tape.sub(states[0], mean));
  for (std::size_t i = 1; i < states.size(); ++i) {
    Tensor d = tape.sub(states[i], mean);
    var_acc = tape.add(var_acc, tape.mul(d, d));
  }
  Tensor var = tape.scale(var_acc, 1.0 / n);
  Tensor std_t = tape.sqrt(tape.add_scalar(var, norm.eps));
  for (const Tensor& s : states) {
    Tensor z = tape.div(tape.sub(s, mean), std_t);
    out.push_back(tape.add(tape.mul(gamma, z), beta));
  }
  if (stats) {
    stats->mean = mean.data;
    stats->var = var.data;
  }
  return out;
}

}  // namespace scmp
