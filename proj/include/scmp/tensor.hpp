#ifndef SCMP_TENSOR_HPP
#define SCMP_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace scmp {

// Thrown on shape mismatches and violated preconditions.
class shape_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_str(const std::vector<int>& shape);

// Dense row-major f64 tensor. `node >= 0` means the tensor is recorded on a
// Tape and participates in backward().
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);
  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> s);

  int rank() const { return static_cast<int>(shape.size()); }
  std::size_t size() const { return data.size(); }
  double item() const;
  bool all_finite() const;
};

// Gradients produced by Tape::backward, indexed by node id.
class GradientMap {
public:
  explicit GradientMap(std::vector<std::vector<double>> g) : grads_(std::move(g)) {}
  const std::vector<double>& at(const Tensor& t) const;

private:
  std::vector<std::vector<double>> grads_;
};

// Define-by-run reverse-mode tape. One tape per forward pass, confined to a
// single thread. Ops record a backward closure; backward() sweeps them in
// reverse, accumulating gradients additively across fan-out.
class Tape {
public:
  Tensor leaf(std::vector<int> shape, std::vector<double> data);
  Tensor leaf(const Tensor& value);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor concat(const Tensor& a, const Tensor& b);

  Tensor relu(const Tensor& x);
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor abs(const Tensor& x);
  Tensor sqrt(const Tensor& x);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& x, double c);
  Tensor add_scalar(const Tensor& x, double c);

  Tensor sum_axis(const Tensor& x, int axis);
  Tensor mean_axis(const Tensor& x, int axis);
  Tensor sum(const Tensor& x);
  Tensor sq_l2_norm(const Tensor& x);

  // Numerically safe binary cross-entropy taking the pre-sigmoid logit.
  Tensor bce_with_logit(const Tensor& logit, double label);

  GradientMap backward(const Tensor& root);

  // Smallest |input| seen by any relu/abs this tape recorded; lets callers
  // detect configurations too close to a subgradient kink for finite
  // differences to be trustworthy.
  double min_kink_distance() const { return min_kink_dist_; }

  std::size_t num_nodes() const { return backs_.size(); }

private:
  using BackFn = std::function<void(std::vector<std::vector<double>>&)>;
  std::vector<BackFn> backs_;
  std::vector<std::size_t> sizes_;
  double min_kink_dist_ = 1e300;

  Tensor record(std::vector<int> shape, std::vector<double> data, BackFn back);
  Tensor unary(const Tensor& x, const std::function<double(double)>& f,
               const std::function<double(double)>& df, bool kinked);
  Tensor binary_elemwise(const Tensor& a, const Tensor& b, char op);
};

// Central-difference gradient check. `eval` must be a pure scalar function of
// the parameter map; `analytic` holds the gradients under test, keyed the same
// way. Relative error uses max(|a|,|n|,1e-4) in the denominator so that
// near-zero gradients are compared at an absolute scale.
struct FiniteDiffReport {
  struct Entry {
    std::string name;
    double max_rel_err;
  };
  std::vector<Entry> entries;
  double worst = 0.0;
  bool pass = true;
};

using ParamMap = std::map<std::string, Tensor>;

FiniteDiffReport finite_diff_check(
    const std::function<double(const ParamMap&)>& eval, const ParamMap& params,
    const ParamMap& analytic, double step, double tolerance);

}  // namespace scmp

#endif
