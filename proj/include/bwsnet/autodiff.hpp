#pragma once
// Minimal reverse-mode differentiation engine: an eager tape over dense
// real tensors with the primitives add, sub, mul (elementwise), matmul,
// scale, tanh, relu, sqrt, sum, mean, concat, constant, and parameter
// reference. Includes parameter containers, checkpoint serialization, and a
// central finite-difference verifier.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bwsnet/core.hpp"

namespace bwsnet {

// Named dense tensors with stable ordering; holds every trainable weight.
struct ParameterSet {
  struct Tensor {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> data;
  };

  std::vector<Tensor> tensors;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (tensors[i].name == name) return static_cast<int>(i);
    return -1;
  }

  Tensor& at(const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw error("ParameterSet: no tensor named '" + name + "'");
    return tensors[i];
  }
  const Tensor& at(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw error("ParameterSet: no tensor named '" + name + "'");
    return tensors[i];
  }

  void add(const std::string& name, int rows, int cols, double fill = 0.0) {
    if (index_of(name) >= 0) throw error("ParameterSet: duplicate tensor name '" + name + "'");
    tensors.push_back({name, rows, cols,
                       std::vector<double>(static_cast<std::size_t>(rows) * cols, fill)});
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const Tensor& t : tensors) n += t.data.size();
    return n;
  }

  // Flat scalar view across tensors in order, for perturbation loops.
  double& scalar(std::size_t flat) {
    for (Tensor& t : tensors) {
      if (flat < t.data.size()) return t.data[flat];
      flat -= t.data.size();
    }
    throw error("ParameterSet: flat index out of range");
  }
};

// Partial derivatives, shape-congruent with a ParameterSet.
struct Gradient {
  std::vector<std::vector<double>> by_tensor;

  explicit Gradient(const ParameterSet& ps) {
    by_tensor.reserve(ps.tensors.size());
    for (const auto& t : ps.tensors) by_tensor.emplace_back(t.data.size(), 0.0);
  }

  double scalar(std::size_t flat) const {
    for (const auto& g : by_tensor) {
      if (flat < g.size()) return g[flat];
      flat -= g.size();
    }
    throw error("Gradient: flat index out of range");
  }
};

namespace detail {
enum class Op {
  constant,
  param,
  add,
  sub,
  mul,
  matmul,
  scale,
  tanh_op,
  relu_op,
  sqrt_op,
  sum_op,
  mean_op,
  concat_op
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::param: return "param";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::matmul: return "matmul";
    case Op::scale: return "scale";
    case Op::tanh_op: return "tanh";
    case Op::relu_op: return "relu";
    case Op::sqrt_op: return "sqrt";
    case Op::sum_op: return "sum";
    case Op::mean_op: return "mean";
    case Op::concat_op: return "concat";
  }
  return "?";
}
}  // namespace detail

// Eager tape: every builder computes its forward value immediately and
// rejects non-finite results with a diagnostic naming the failing node.
class Tape {
 public:
  explicit Tape(const ParameterSet& params) : params_(&params) {}

  int constant(const std::vector<double>& v, int rows, int cols, const std::string& label = "") {
    if (static_cast<std::size_t>(rows) * cols != v.size())
      throw error("Tape::constant: shape does not match data size");
    Node n;
    n.op = detail::Op::constant;
    n.rows = rows;
    n.cols = cols;
    n.val = v;
    n.label = label;
    return push(std::move(n));
  }

  int scalar(double x, const std::string& label = "") { return constant({x}, 1, 1, label); }

  int param(int tensor_index) {
    const auto& t = params_->tensors.at(static_cast<std::size_t>(tensor_index));
    Node n;
    n.op = detail::Op::param;
    n.rows = t.rows;
    n.cols = t.cols;
    n.val = t.data;
    n.param_index = tensor_index;
    n.label = t.name;
    return push(std::move(n));
  }
  int param(const std::string& name) {
    int i = params_->index_of(name);
    if (i < 0) throw error("Tape::param: no tensor named '" + name + "'");
    return param(i);
  }

  int add(int a, int b) { return binary_elementwise(detail::Op::add, a, b); }
  int sub(int a, int b) { return binary_elementwise(detail::Op::sub, a, b); }
  int mul(int a, int b) { return binary_elementwise(detail::Op::mul, a, b); }

  int matmul(int a, int b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.cols != nb.rows) throw error("Tape::matmul: inner dimensions differ");
    Node n;
    n.op = detail::Op::matmul;
    n.a = a;
    n.b = b;
    n.rows = na.rows;
    n.cols = nb.cols;
    n.val.assign(static_cast<std::size_t>(n.rows) * n.cols, 0.0);
    for (int i = 0; i < na.rows; ++i)
      for (int k = 0; k < na.cols; ++k) {
        double x = na.val[static_cast<std::size_t>(i) * na.cols + k];
        if (x == 0.0) continue;
        for (int j = 0; j < nb.cols; ++j)
          n.val[static_cast<std::size_t>(i) * n.cols + j] +=
              x * nb.val[static_cast<std::size_t>(k) * nb.cols + j];
      }
    return push(std::move(n));
  }

  int scale(int a, double s) {
    const Node& na = node(a);
    Node n;
    n.op = detail::Op::scale;
    n.a = a;
    n.scalar_arg = s;
    n.rows = na.rows;
    n.cols = na.cols;
    n.val = na.val;
    for (double& x : n.val) x *= s;
    return push(std::move(n));
  }

  int tanh(int a) { return unary(detail::Op::tanh_op, a, [](double x) { return std::tanh(x); }); }
  int relu(int a) {
    return unary(detail::Op::relu_op, a, [](double x) { return x > 0.0 ? x : 0.0; });
  }
  // Forward is exact sqrt; only the backward pass clamps the denominator.
  int sqrt(int a) {
    return unary(detail::Op::sqrt_op, a, [](double x) { return std::sqrt(x); });
  }

  int sum(int a) { return reduce(detail::Op::sum_op, a); }
  int mean(int a) { return reduce(detail::Op::mean_op, a); }

  // Stack two column vectors into one taller column vector.
  int concat(int a, int b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.cols != 1 || nb.cols != 1) throw error("Tape::concat: expects column vectors");
    Node n;
    n.op = detail::Op::concat_op;
    n.a = a;
    n.b = b;
    n.rows = na.rows + nb.rows;
    n.cols = 1;
    n.val = na.val;
    n.val.insert(n.val.end(), nb.val.begin(), nb.val.end());
    return push(std::move(n));
  }

  int rows(int id) const { return node(id).rows; }
  int cols(int id) const { return node(id).cols; }
  const std::vector<double>& values(int id) const { return node(id).val; }
  double value(int id) const {
    const Node& n = node(id);
    if (n.rows != 1 || n.cols != 1) throw error("Tape::value: node is not scalar");
    return n.val[0];
  }

  // Reverse pass from a scalar root; returns the parameter gradient.
  Gradient backward(int root) {
    if (node(root).rows != 1 || node(root).cols != 1)
      throw error("Tape::backward: root must be scalar");
    for (Node& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    nodes_[static_cast<std::size_t>(root)].grad[0] = 1.0;

    for (int id = root; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      bool any = false;
      for (double g : n.grad)
        if (g != 0.0) {
          any = true;
          break;
        }
      if (!any) continue;
      switch (n.op) {
        case detail::Op::constant:
        case detail::Op::param:
          break;
        case detail::Op::add: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          Node& nb = nodes_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            na.grad[i] += n.grad[i];
            nb.grad[i] += n.grad[i];
          }
          break;
        }
        case detail::Op::sub: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          Node& nb = nodes_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            na.grad[i] += n.grad[i];
            nb.grad[i] -= n.grad[i];
          }
          break;
        }
        case detail::Op::mul: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          Node& nb = nodes_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            na.grad[i] += n.grad[i] * nb.val[i];
            nb.grad[i] += n.grad[i] * na.val[i];
          }
          break;
        }
        case detail::Op::matmul: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          Node& nb = nodes_[static_cast<std::size_t>(n.b)];
          // dA = G * B^T, dB = A^T * G
          for (int i = 0; i < na.rows; ++i)
            for (int k = 0; k < na.cols; ++k) {
              double acc = 0.0;
              for (int j = 0; j < n.cols; ++j)
                acc += n.grad[static_cast<std::size_t>(i) * n.cols + j] *
                       nb.val[static_cast<std::size_t>(k) * nb.cols + j];
              na.grad[static_cast<std::size_t>(i) * na.cols + k] += acc;
            }
          for (int k = 0; k < nb.rows; ++k)
            for (int j = 0; j < nb.cols; ++j) {
              double acc = 0.0;
              for (int i = 0; i < na.rows; ++i)
                acc += na.val[static_cast<std::size_t>(i) * na.cols + k] *
                       n.grad[static_cast<std::size_t>(i) * n.cols + j];
              nb.grad[static_cast<std::size_t>(k) * nb.cols + j] += acc;
            }
          break;
        }
        case detail::Op::scale: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < n.grad.size(); ++i) na.grad[i] += n.grad[i] * n.scalar_arg;
          break;
        }
        case detail::Op::tanh_op: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < n.grad.size(); ++i)
            na.grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
          break;
        }
        case detail::Op::relu_op: {
          // Subgradient 0 at the kink: only strictly positive inputs pass.
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (na.val[i] > 0.0) na.grad[i] += n.grad[i];
          break;
        }
        case detail::Op::sqrt_op: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          for (std::size_t i = 0; i < n.grad.size(); ++i)
            na.grad[i] += n.grad[i] / (2.0 * std::sqrt(na.val[i] + 1e-12));
          break;
        }
        case detail::Op::sum_op: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          for (double& g : na.grad) g += n.grad[0];
          break;
        }
        case detail::Op::mean_op: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          double g = n.grad[0] / static_cast<double>(na.val.size());
          for (double& x : na.grad) x += g;
          break;
        }
        case detail::Op::concat_op: {
          Node& na = nodes_[static_cast<std::size_t>(n.a)];
          Node& nb = nodes_[static_cast<std::size_t>(n.b)];
          for (std::size_t i = 0; i < na.grad.size(); ++i) na.grad[i] += n.grad[i];
          for (std::size_t i = 0; i < nb.grad.size(); ++i)
            nb.grad[i] += n.grad[na.grad.size() + i];
          break;
        }
      }
    }

    Gradient grad(*params_);
    for (const Node& n : nodes_)
      if (n.op == detail::Op::param) {
        auto& g = grad.by_tensor[static_cast<std::size_t>(n.param_index)];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      }
    return grad;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    detail::Op op = detail::Op::constant;
    int a = -1;
    int b = -1;
    int rows = 1;
    int cols = 1;
    double scalar_arg = 0.0;
    int param_index = -1;
    std::string label;
    std::vector<double> val;
    std::vector<double> grad;
  };

  const ParameterSet* params_;
  std::vector<Node> nodes_;

  const Node& node(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw error("Tape: node id out of range");
    return nodes_[static_cast<std::size_t>(id)];
  }

  std::string describe(const Node& n) const {
    std::string s = detail::op_name(n.op);
    s += "#" + std::to_string(nodes_.size());
    if (!n.label.empty()) s += " ('" + n.label + "')";
    return s;
  }

  int push(Node&& n) {
    for (double x : n.val)
      if (!std::isfinite(x)) throw error("Tape: non-finite value at node " + describe(n));
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary_elementwise(detail::Op op, int a, int b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.rows != nb.rows || na.cols != nb.cols)
      throw error(std::string("Tape::") + detail::op_name(op) + ": shape mismatch");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.rows = na.rows;
    n.cols = na.cols;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) {
      switch (op) {
        case detail::Op::add: n.val[i] = na.val[i] + nb.val[i]; break;
        case detail::Op::sub: n.val[i] = na.val[i] - nb.val[i]; break;
        default: n.val[i] = na.val[i] * nb.val[i]; break;
      }
    }
    return push(std::move(n));
  }

  template <class F>
  int unary(detail::Op op, int a, F f) {
    const Node& na = node(a);
    Node n;
    n.op = op;
    n.a = a;
    n.rows = na.rows;
    n.cols = na.cols;
    n.val.resize(na.val.size());
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = f(na.val[i]);
    return push(std::move(n));
  }

  int reduce(detail::Op op, int a) {
    const Node& na = node(a);
    Node n;
    n.op = op;
    n.a = a;
    n.rows = 1;
    n.cols = 1;
    double acc = 0.0;
    for (double x : na.val) acc += x;
    if (op == detail::Op::mean_op) acc /= static_cast<double>(na.val.size());
    n.val = {acc};
    return push(std::move(n));
  }
};

// Builds the expression on a fresh tape and returns (loss, gradient).
inline std::pair<double, Gradient> evaluate_and_grad(
    const std::function<int(Tape&)>& build, const ParameterSet& params) {
  Tape tape(params);
  int root = build(tape);
  double loss = tape.value(root);
  return {loss, tape.backward(root)};
}

// Central finite differences over every scalar parameter; returns the
// maximum relative error against the analytic gradient, with denominator
// max(|a|, |b|, 1e-8).
inline double finite_diff_check(const std::function<int(Tape&)>& build, const ParameterSet& params,
                                double eps) {
  if (!(eps > 0.0)) throw error("finite_diff_check: eps must be positive");
  auto [loss, grad] = evaluate_and_grad(build, params);
  (void)loss;
  ParameterSet work = params;
  double max_rel = 0.0;
  std::size_t n = work.scalar_count();
  for (std::size_t i = 0; i < n; ++i) {
    double orig = work.scalar(i);
    work.scalar(i) = orig + eps;
    Tape tp(work);
    double lp = tp.value(build(tp));
    work.scalar(i) = orig - eps;
    Tape tm(work);
    double lm = tm.value(build(tm));
    work.scalar(i) = orig;
    double fd = (lp - lm) / (2.0 * eps);
    double an = grad.scalar(i);
    double denom = std::max(std::max(std::fabs(fd), std::fabs(an)), 1e-8);
    double rel = std::fabs(fd - an) / denom;
    if (rel > max_rel) max_rel = rel;
  }
  return max_rel;
}

// --- Checkpoint serialization: text manifest with name -> shape, then
// %.17g data rows (one tensor row per line). Byte-stable across reruns. ---

inline void save_checkpoint(const ParameterSet& ps, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("save_checkpoint: cannot open '" + path + "'");
  out << "bwsnet-checkpoint v1\n";
  out << "tensors " << ps.tensors.size() << "\n";
  for (const auto& t : ps.tensors) {
    out << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
    for (int r = 0; r < t.rows; ++r) {
      for (int c = 0; c < t.cols; ++c) {
        if (c) out << " ";
        out << fmt_g17(t.data[static_cast<std::size_t>(r) * t.cols + c]);
      }
      out << "\n";
    }
  }
  if (!out) throw error("save_checkpoint: write failed for '" + path + "'");
}

inline ParameterSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("load_checkpoint: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "bwsnet-checkpoint v1")
    throw error("load_checkpoint: bad header in '" + path + "'");
  std::size_t count = 0;
  {
    std::string word;
    if (!std::getline(in, line)) throw error("load_checkpoint: truncated '" + path + "'");
    std::istringstream ss(line);
    ss >> word >> count;
    if (word != "tensors") throw error("load_checkpoint: missing tensor count in '" + path + "'");
  }
  ParameterSet ps;
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw error("load_checkpoint: truncated '" + path + "'");
    std::istringstream ss(line);
    std::string word, name;
    int rows = 0, cols = 0;
    ss >> word >> name >> rows >> cols;
    if (word != "tensor" || rows <= 0 || cols <= 0)
      throw error("load_checkpoint: bad tensor header in '" + path + "'");
    ps.add(name, rows, cols);
    auto& t = ps.tensors.back();
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw error("load_checkpoint: truncated '" + path + "'");
      std::istringstream row(line);
      for (int c = 0; c < cols; ++c)
        if (!(row >> t.data[static_cast<std::size_t>(r) * cols + c]))
          throw error("load_checkpoint: short data row in '" + path + "'");
    }
  }
  return ps;
}

}  // namespace bwsnet
