#ifndef SCMP_NN_HPP
#define SCMP_NN_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "scmp/tensor.hpp"

namespace scmp {

// Xavier/Glorot uniform init, bounds +-sqrt(6/(fan_in+fan_out)).
// For a 2-D shape [out,in] fan_in = in, fan_out = out.
Tensor xavier_init(const std::vector<int>& shape, std::uint64_t seed);

struct Param {
  std::string name;
  Tensor value;
  std::vector<double> adam_m, adam_v;
};

// Named trainable parameters plus their Adam moment buffers.
class ParamRegistry {
public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<Param>& params() const { return params_; }
  std::vector<Param>& params() { return params_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t t) { step_ = t; }

  // One bias-corrected Adam update from a name -> flat-gradient map.
  // Every registered parameter must have a gradient.
  void adam_step(const std::unordered_map<std::string, std::vector<double>>& grads,
                 double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);

private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

// Binds registry parameters onto a tape as leaves, remembering node ids so
// gradients can be pulled out by name after backward().
class TapeBinding {
public:
  TapeBinding(Tape& tape, const ParamRegistry& reg) : tape_(tape), reg_(reg) {}
  const Tensor& operator[](const std::string& name);
  std::unordered_map<std::string, std::vector<double>> collect(const GradientMap& g) const;

private:
  Tape& tape_;
  const ParamRegistry& reg_;
  std::unordered_map<std::string, Tensor> bound_;
};

// Cho-style GRU cell; weights live in a registry under `prefix`.
// z = sigma(Wz m + Uz h + bz), r = sigma(Wr m + Ur h + br),
// cand = tanh(Wh m + Uh (r*h) + bh), h' = (1-z)*h + z*cand.
struct GruCell {
  int input_size = 0;   // message dim M
  int hidden_size = 0;  // state dim L
  std::string prefix;

  void register_params(ParamRegistry& reg, std::mt19937_64& seeds) const;
  Tensor step(Tape& tape, TapeBinding& bind, const Tensor& h_prev,
              const Tensor& msg) const;
};

// Q affine layers with ReLU between them; last layer is a plain affine map to
// one scalar (no activation).
struct MlpHead {
  std::vector<int> widths;  // widths[0] = input dim, widths.back() == 1
  std::string prefix;

  static MlpHead make(int input_dim, int depth, const std::string& prefix);
  void register_params(ParamRegistry& reg, std::mt19937_64& seeds) const;
  Tensor forward(Tape& tape, TapeBinding& bind, const Tensor& x) const;
};

enum class NormMode { kTrain, kEval };

// Running moments for feature standardization; the trainable scale/shift live
// in the registry as <prefix>.gamma / <prefix>.beta.
struct NormState {
  int dim = 0;
  double momentum = 0.9;
  double eps = 1e-5;
  bool initialized = false;
  std::vector<double> running_mean, running_var;

  explicit NormState(int d = 0)
      : dim(d), running_mean(static_cast<std::size_t>(d), 0.0),
        running_var(static_cast<std::size_t>(d), 1.0) {}

  void update(const std::vector<double>& batch_mean, const std::vector<double>& batch_var);
};

struct NormBatchStats {
  std::vector<double> mean, var;
};

// Standardizes each state per feature. Train mode computes moments over the
// given states (gradient flows through them) and reports them via `stats`;
// the caller folds them into `norm` afterwards so update order stays
// deterministic. Eval mode uses the running moments as constants.
std::vector<Tensor> normalize_states(Tape& tape, TapeBinding& bind,
                                     const std::vector<Tensor>& states,
                                     const std::string& prefix,
                                     const NormState& norm, NormMode mode,
                                     NormBatchStats* stats = nullptr);

void register_norm_params(ParamRegistry& reg, int dim, const std::string& prefix);

}  // namespace scmp

#endif
