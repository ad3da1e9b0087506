#include "scmp/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace scmp {

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

static std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != data.size())
    throw shape_error("tensor data length " + std::to_string(data.size()) +
                      " does not match shape " + shape_str(shape));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> s) {
  std::size_t n = shape_numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

double Tensor::item() const {
  if (data.size() != 1)
    throw shape_error("item() on non-scalar tensor of shape " + shape_str(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

const std::vector<double>& GradientMap::at(const Tensor& t) const {
  if (t.node < 0 || static_cast<std::size_t>(t.node) >= grads_.size())
    throw std::out_of_range("tensor is not a node of this tape");
  return grads_[static_cast<std::size_t>(t.node)];
}

Tensor Tape::record(std::vector<int> shape, std::vector<double> data, BackFn back) {
  Tensor t(std::move(shape), std::move(data));
  t.node = static_cast<int>(backs_.size());
  backs_.push_back(std::move(back));
  sizes_.push_back(t.size());
  return t;
}

Tensor Tape::leaf(std::vector<int> shape, std::vector<double> data) {
  return record(std::move(shape), std::move(data), nullptr);
}

Tensor Tape::leaf(const Tensor& value) { return leaf(value.shape, value.data); }

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2)
    throw shape_error("matmul: left operand must be rank 2, got " + shape_str(a.shape));
  bool vec = b.rank() == 1;
  if (!vec && b.rank() != 2)
    throw shape_error("matmul: right operand must be rank 1 or 2, got " + shape_str(b.shape));
  const int r = a.shape[0], s = a.shape[1];
  const int t = vec ? 1 : b.shape[1];
  if (s != b.shape[0])
    throw shape_error("matmul: inner dimensions disagree, " + shape_str(a.shape) +
                      " vs " + shape_str(b.shape));

  std::vector<double> out(static_cast<std::size_t>(r) * t, 0.0);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < s; ++k) {
      double av = a.data[static_cast<std::size_t>(i) * s + k];
      for (int j = 0; j < t; ++j)
        out[static_cast<std::size_t>(i) * t + j] += av * b.data[static_cast<std::size_t>(k) * t + j];
    }

  int an = a.node, bn = b.node;
  std::vector<int> oshape = vec ? std::vector<int>{r} : std::vector<int>{r, t};
  int out_id = static_cast<int>(backs_.size());
  auto real = [an, bn, ad = a.data, bd = b.data, r, s, t,
               out_id](std::vector<std::vector<double>>& g) {
    const std::vector<double>& up = g[static_cast<std::size_t>(out_id)];
    if (an >= 0) {
      std::vector<double>& ga = g[static_cast<std::size_t>(an)];
      for (int i = 0; i < r; ++i)
        for (int k = 0; k < s; ++k) {
          double acc = 0.0;
          for (int j = 0; j < t; ++j)
            acc += up[static_cast<std::size_t>(i) * t + j] * bd[static_cast<std::size_t>(k) * t + j];
          ga[static_cast<std::size_t>(i) * s + k] += acc;
        }
    }
    if (bn >= 0) {
      std::vector<double>& gb = g[static_cast<std::size_t>(bn)];
      for (int k = 0; k < s; ++k)
        for (int j = 0; j < t; ++j) {
          double acc = 0.0;
          for (int i = 0; i < r; ++i)
            acc += ad[static_cast<std::size_t>(i) * s + k] * up[static_cast<std::size_t>(i) * t + j];
          gb[static_cast<std::size_t>(k) * t + j] += acc;
        }
    }
  };
  return record(std::move(oshape), std::move(out), std::move(real));
}

Tensor Tape::concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank())
    throw shape_error("concat: rank mismatch " + shape_str(a.shape) + " vs " +
                      shape_str(b.shape));
  for (int i = 0; i + 1 < a.rank(); ++i)
    if (a.shape[i] != b.shape[i])
      throw shape_error("concat: leading dims disagree " + shape_str(a.shape) +
                        " vs " + shape_str(b.shape));
  const int last = a.rank() - 1;
  if (last < 0) throw shape_error("concat: rank-0 operands");
  const int p = a.shape[last], q = b.shape[last];
  int lead = 1;
  for (int i = 0; i < last; ++i) lead *= a.shape[i];

  std::vector<int> oshape = a.shape;
  oshape[last] = p + q;
  std::vector<double> out(static_cast<std::size_t>(lead) * (p + q));
  for (int row = 0; row < lead; ++row) {
    for (int j = 0; j < p; ++j)
      out[static_cast<std::size_t>(row) * (p + q) + j] = a.data[static_cast<std::size_t>(row) * p + j];
    for (int j = 0; j < q; ++j)
      out[static_cast<std::size_t>(row) * (p + q) + p + j] = b.data[static_cast<std::size_t>(row) * q + j];
  }
  int an = a.node, bn = b.node;
  int out_id = static_cast<int>(backs_.size());
  auto back = [an, bn, lead, p, q, out_id](std::vector<std::vector<double>>& g) {
    const std::vector<double>& up = g[static_cast<std::size_t>(out_id)];
    for (int row = 0; row < lead; ++row) {
      if (an >= 0)
        for (int j = 0; j < p; ++j)
          g[static_cast<std::size_t>(an)][static_cast<std::size_t>(row) * p + j] +=
              up[static_cast<std::size_t>(row) * (p + q) + j];
      if (bn >= 0)
        for (int j = 0; j < q; ++j)
          g[static_cast<std::size_t>(bn)][static_cast<std::size_t>(row) * q + j] +=
              up[static_cast<std::size_t>(row) * (p + q) + p + j];
    }
  };
  return record(std::move(oshape), std::move(out), std::move(back));
}

Tensor Tape::unary(const Tensor& x, const std::function<double(double)>& f,
                   const std::function<double(double)>& df, bool kinked) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = f(x.data[i]);
    if (kinked) {
      double d = std::fabs(x.data[i]);
      if (d < min_kink_dist_) min_kink_dist_ = d;
    }
  }
  int xn = x.node;
  int out_id = static_cast<int>(backs_.size());
  std::vector<double> xd = x.data;
  auto back = [xn, xd, df, out_id](std::vector<std::vector<double>>& g) {
    if (xn < 0) return;
    const std::vector<double>& up = g[static_cast<std::size_t>(out_id)];
    std::vector<double>& gx = g[static_cast<std::size_t>(xn)];
    for (std::size_t i = 0; i < xd.size(); ++i) gx[i] += up[i] * df(xd[i]);
  };
  return record(x.shape, std::move(out), std::move(back));
}

Tensor Tape::relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; }, true);
}

Tensor Tape::sigmoid(const Tensor& x) {
  auto sg = [](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  };
  return unary(
      x, sg, [sg](double v) { double s = sg(v); return s * (1.0 - s); }, false);
}

Tensor Tape::tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double v) { double t = std::tanh(v); return 1.0 - t * t; }, false);
}

Tensor Tape::abs(const Tensor& x) {
  // subgradient 0 at the kink
  return unary(
      x, [](double v) { return std::fabs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }, true);
}

Tensor Tape::sqrt(const Tensor& x) {
  return unary(
      x, [](double v) { return std::sqrt(v); },
      [](double v) { return 0.5 / std::sqrt(v); }, false);
}

Tensor Tape::binary_elemwise(const Tensor& a, const Tensor& b, char op) {
  if (a.shape != b.shape)
    throw shape_error(std::string("elementwise ") + op + ": shape mismatch " +
                      shape_str(a.shape) + " vs " + shape_str(b.shape));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    switch (op) {
      case '+': out[i] = a.data[i] + b.data[i]; break;
      case '-': out[i] = a.data[i] - b.data[i]; break;
      case '*': out[i] = a.data[i] * b.data[i]; break;
      case '/': out[i] = a.data[i] / b.data[i]; break;
    }
  }
  int an = a.node, bn = b.node;
  int out_id = static_cast<int>(backs_.size());
  std::vector<double> ad = a.data, bd = b.data;
  auto back = [an, bn, ad, bd, op, out_id](std::vector<std::vector<double>>& g) {
    const std::vector<double>& up = g[static_cast<std::size_t>(out_id)];
    for (std::size_t i = 0; i < ad.size(); ++i) {
      double da = 0.0, db = 0.0;
      switch (op) {
        case '+': da = 1.0; db = 1.0; break;
        case '-': da = 1.0; db = -1.0; break;
        case '*': da = bd[i]; db = ad[i]; break;
        case '/': da = 1.0 / bd[i]; db = -ad[i] / (bd[i] * bd[i]); break;
      }
      if (an >= 0) g[static_cast<std::size_t>(an)][i] += up[i] * da;
      if (bn >= 0) g[static_cast<std::size_t>(bn)][i] += up[i] * db;
    }
  };
  return record(a.shape, std::move(out), std::move(back));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) { return binary_elemwise(a, b, '+'); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return binary_elemwise(a, b, '-'); }
Tensor Tape::mul(const Tensor& a, const Tensor& b) { return binary_elemwise(a, b, '*'); }
Tensor Tape::div(const Tensor& a, const Tensor& b) { return binary_elemwise(a, b, '/'); }

Tensor Tape::scale(const Tensor& x, double c) {
  return unary(
      x, [c](double v) { return c * v; }, [c](double) { return c; }, false);
}

Tensor Tape::add_scalar(const Tensor& x, double c) {
  return unary(
      x, [c](double v) { return v + c; }, [](double) { return 1.0; }, false);
}

Tensor Tape::sum_axis(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank())
    throw shape_error("sum_axis: axis " + std::to_string(axis) +
                      " out of range for shape " + shape_str(x.shape));
  if (x.shape[axis] == 0) throw shape_error("sum_axis: empty reduction axis");
  if (x.rank() == 1) {
    double s = 0.0;
    for (double v : x.data) s += v;
    int xn = x.node;
    int out_id = static_cast<int>(backs_.size());
    std::size_t n = x.size();
    auto back = [xn, n, out_id](std::vector<std::vector<double>>& g) {
      if (xn < 0) return;
      double up = g[static_cast<std::size_t>(out_id)][0];
      for (std::size_t i = 0; i < n; ++i) g[static_cast<std::size_t>(xn)][i] += up;
    };
    return record({1}, {s}, std::move(back));
  }
  if (x.rank() != 2) throw shape_error("sum_axis: only rank 1 or 2 supported");
  const int rows = x.shape[0], cols = x.shape[1];
  std::vector<int> oshape = {axis == 0 ? cols : rows};
  std::vector<double> out(static_cast<std::size_t>(oshape[0]), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[axis == 0 ? j : i] += x.data[static_cast<std::size_t>(i) * cols + j];
  int xn = x.node;
  int out_id = static_cast<int>(backs_.size());
  auto back = [xn, rows, cols, axis, out_id](std::vector<std::vector<double>>& g) {
    if (xn < 0) return;
    const std::vector<double>& up = g[static_cast<std::size_t>(out_id)];
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        g[static_cast<std::size_t>(xn)][static_cast<std::size_t>(i) * cols + j] +=
            up[axis == 0 ? j : i];
  };
  return record(std::move(oshape), std::move(out), std::move(back));
}

Tensor Tape::mean_axis(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank())
    throw shape_error("mean_axis: axis " + std::to_string(axis) +
                      " out of range for shape " + shape_str(x.shape));
  if (x.shape[axis] == 0) throw shape_error("mean_axis: empty reduction axis");
  return scale(sum_axis(x, axis), 1.0 / x.shape[axis]);
}

Tensor Tape::sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data) s += v;
  int xn = x.node;
  int out_id = static_cast<int>(backs_.size());
  std::size_t n = x.size();
  auto back = [xn, n, out_id](std::vector<std::vector<double>>& g) {
    if (xn < 0) return;
    double up = g[static_cast<std::size_t>(out_id)][0];
    for (std::size_t i = 0; i < n; ++i) g[static_cast<std::size_t>(xn)][i] += up;
  };
  return record({1}, {s}, std::move(back));
}

Tensor Tape::sq_l2_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data) s += v * v;
  int xn = x.node;
  int out_id = static_cast<int>(backs_.size());
  std::vector<double> xd = x.data;
  auto back = [xn, xd, out_id](std::vector<std::vector<double>>& g) {
    if (xn < 0) return;
    double up = g[static_cast<std::size_t>(out_id)][0];
    for (std::size_t i = 0; i < xd.size(); ++i)
      g[static_cast<std::size_t>(xn)][i] += up * 2.0 * xd[i];
  };
  return record({1}, {s}, std::move(back));
}

Tensor Tape::bce_with_logit(const Tensor& logit, double label) {
  double z = logit.item();
  // max(z,0) - y*z + log(1+exp(-|z|))
  double loss = std::max(z, 0.0) - label * z + std::log1p(std::exp(-std::fabs(z)));
  int zn = logit.node;
  int out_id = static_cast<int>(backs_.size());
  auto back = [zn, z, label, out_id](std::vector<std::vector<double>>& g) {
    if (zn < 0) return;
    double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    g[static_cast<std::size_t>(zn)][0] += g[static_cast<std::size_t>(out_id)][0] * (s - label);
  };
  return record({1}, {loss}, std::move(back));
}

GradientMap Tape::backward(const Tensor& root) {
  if (root.size() != 1)
    throw shape_error("backward: root must be scalar, got shape " + shape_str(root.shape));
  if (root.node < 0) throw shape_error("backward: root is not on this tape");
  std::vector<std::vector<double>> g(backs_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) g[i].assign(sizes_[i], 0.0);
  g[static_cast<std::size_t>(root.node)][0] = 1.0;
  for (std::size_t i = backs_.size(); i-- > 0;) {
    if (backs_[i]) backs_[i](g);
  }
  return GradientMap(std::move(g));
}

FiniteDiffReport finite_diff_check(
    const std::function<double(const ParamMap&)>& eval, const ParamMap& params,
    const ParamMap& analytic, double step, double tolerance) {
  FiniteDiffReport report;
  for (const auto& [name, value] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end())
      throw std::invalid_argument("finite_diff_check: missing analytic gradient for " + name);
    const Tensor& grad = it->second;
    double worst = 0.0;
    ParamMap work = params;
    for (std::size_t i = 0; i < value.size(); ++i) {
      double orig = value.data[i];
      work[name].data[i] = orig + step;
      double fp = eval(work);
      work[name].data[i] = orig - step;
      double fm = eval(work);
      work[name].data[i] = orig;
      double numeric = (fp - fm) / (2.0 * step);
      double a = grad.data[i];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4});
      double rel = std::fabs(a - numeric) / denom;
      if (rel > worst) worst = rel;
    }
    report.entries.push_back({name, worst});
    if (worst > report.worst) report.worst = worst;
    if (worst > tolerance) report.pass = false;
  }
  return report;
}

}  // namespace scmp
