#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdp/error.hpp"
#include "tdp/tensor.hpp"

namespace tdp {

// A trainable tensor. Gradients accumulate here across backward passes until
// the optimizer consumes and clears them.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on the tape.
using Var = std::uint32_t;

/// Reverse-mode gradient tape. Forward operations append nodes in
/// topological order (inputs always precede their consumers); backward()
/// visits them once in exact reverse order, accumulates gradients into the
/// Parameters referenced by the graph, and resets the tape for the next
/// example.
class Tape {
 public:
  // Leaf holding a fixed input; no gradient flows into it.
  Var constant(Tensor t) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(t);
    return push(std::move(n));
  }

  Var constant_vector(std::vector<double> values) {
    return constant(Tensor::vector(std::move(values)));
  }

  // Leaf bound to a Parameter; backward adds into p.grad.
  Var param(Parameter& p) {
    Node n;
    n.op = Op::kParam;
    n.value = p.value;
    n.param = &p;
    return push(std::move(n));
  }

  // Row `row` of a 2-D parameter (embedding lookup). Backward touches only
  // that row of the table's gradient.
  Var lookup(Parameter& table, std::size_t row) {
    if (!table.value.is_matrix())
      fail("lookup: parameter '" + table.name + "' is not 2-D, shape " +
           shape_to_string(table.value.shape));
    if (row >= table.value.rows())
      fail("lookup: row " + std::to_string(row) + " out of range for '" +
           table.name + "' with " + std::to_string(table.value.rows()) +
           " rows");
    Node n;
    n.op = Op::kLookup;
    n.param = &table;
    n.index = row;
    const std::size_t cols = table.value.cols();
    n.value = Tensor({cols});
    for (std::size_t j = 0; j < cols; ++j)
      n.value[j] = table.value.at(row, j);
    return push(std::move(n));
  }

  // Matrix-vector product: m [r x c] times x [c] -> [r].
  Var matvec(Var m, Var x) {
    const Tensor& mv = value(m);
    const Tensor& xv = value(x);
    if (!mv.is_matrix() || !xv.is_vector() || mv.cols() != xv.size())
      fail("matvec: incompatible shapes " + shape_to_string(mv.shape) +
           " and " + shape_to_string(xv.shape));
    Node n;
    n.op = Op::kMatVec;
    n.inputs = {m, x};
    n.value = Tensor({mv.rows()});
    for (std::size_t i = 0; i < mv.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < mv.cols(); ++j) acc += mv.at(i, j) * xv[j];
      n.value[i] = acc;
    }
    return push(std::move(n));
  }

  Var add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_same_shape("add", av, bv);
    Node n;
    n.op = Op::kAdd;
    n.inputs = {a, b};
    n.value = av;
    for (std::size_t i = 0; i < bv.size(); ++i) n.value[i] += bv[i];
    return push(std::move(n));
  }

  // Concatenation of 1-D vectors.
  Var concat(std::span<const Var> parts) {
    require(!parts.empty(), "concat: empty input list");
    std::size_t total = 0;
    for (Var v : parts) {
      if (!value(v).is_vector())
        fail("concat: input is not 1-D, shape " +
             shape_to_string(value(v).shape));
      total += value(v).size();
    }
    Node n;
    n.op = Op::kConcat;
    n.inputs.assign(parts.begin(), parts.end());
    n.value = Tensor({total});
    std::size_t off = 0;
    for (Var v : parts) {
      const Tensor& t = value(v);
      for (std::size_t i = 0; i < t.size(); ++i) n.value[off + i] = t[i];
      off += t.size();
    }
    return push(std::move(n));
  }

  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var tanh(Var x) {
    Node n;
    n.op = Op::kTanh;
    n.inputs = {x};
    n.value = value(x);
    for (double& v : n.value.data) v = std::tanh(v);
    return push(std::move(n));
  }

  Var sigmoid(Var x) {
    Node n;
    n.op = Op::kSigmoid;
    n.inputs = {x};
    n.value = value(x);
    for (double& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(n));
  }

  // Elementwise product.
  Var mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_same_shape("mul", av, bv);
    Node n;
    n.op = Op::kMul;
    n.inputs = {a, b};
    n.value = av;
    for (std::size_t i = 0; i < bv.size(); ++i) n.value[i] *= bv[i];
    return push(std::move(n));
  }

  // Sum over a set of same-shaped tensors.
  Var sum(std::span<const Var> xs) {
    require(!xs.empty(), "sum: empty input list");
    const Tensor& first = value(xs.front());
    Node n;
    n.op = Op::kSum;
    n.inputs.assign(xs.begin(), xs.end());
    n.value = first;
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const Tensor& t = value(xs[k]);
      check_same_shape("sum", first, t);
      for (std::size_t i = 0; i < t.size(); ++i) n.value[i] += t[i];
    }
    return push(std::move(n));
  }

  Var sum(std::initializer_list<Var> xs) {
    return sum(std::span<const Var>(xs.begin(), xs.size()));
  }

  // Scalar (shape [1]) times tensor.
  Var scale(Var scalar, Var x) {
    const Tensor& sv = value(scalar);
    if (!sv.is_scalar())
      fail("scale: scale factor has shape " + shape_to_string(sv.shape) +
           ", expected a scalar");
    Node n;
    n.op = Op::kScale;
    n.inputs = {scalar, x};
    n.value = value(x);
    for (double& v : n.value.data) v *= sv[0];
    return push(std::move(n));
  }

  // Numerically stable softmax over a 1-D vector.
  Var softmax(Var x) {
    const Tensor& xv = value(x);
    if (!xv.is_vector() || xv.size() == 0)
      fail("softmax: input must be a non-empty vector, got shape " +
           shape_to_string(xv.shape));
    Node n;
    n.op = Op::kSoftmax;
    n.inputs = {x};
    n.value = xv;
    double mx = xv[0];
    for (double v : xv.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : n.value.data) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : n.value.data) v /= z;
    return push(std::move(n));
  }

  // -log softmax(scores)[gold], computed via log-sum-exp.
  Var cross_entropy(Var scores, std::size_t gold) {
    const Tensor& sv = value(scores);
    if (!sv.is_vector() || sv.size() == 0)
      fail("cross_entropy: scores must be a non-empty vector, got shape " +
           shape_to_string(sv.shape));
    if (gold >= sv.size())
      fail("cross_entropy: gold index " + std::to_string(gold) +
           " out of range for " + std::to_string(sv.size()) + " scores");
    Node n;
    n.op = Op::kCrossEntropy;
    n.inputs = {scores};
    n.index = gold;
    double mx = sv[0];
    for (double v : sv.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : sv.data) z += std::exp(v - mx);
    n.value = Tensor::scalar(mx + std::log(z) - sv[gold]);
    return push(std::move(n));
  }

  const Tensor& value(Var v) const { return nodes_.at(v).value; }

  double scalar_value(Var v) const {
    const Tensor& t = value(v);
    require(t.is_scalar(), "scalar_value: node is not a scalar");
    return t[0];
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Backward pass from a scalar loss: visits nodes in exact reverse
  /// creation order, accumulates into Parameter::grad, then clears the tape.
  void backward(Var loss) {
    if (nodes_.empty() || loss >= nodes_.size())
      fail("backward: no recorded forward pass for the given loss");
    require(nodes_[loss].value.is_scalar(), "backward: loss is not a scalar");
    for (Node& n : nodes_) n.grad = Tensor(n.value.shape);
    nodes_[loss].grad[0] = 1.0;
    for (std::size_t v = loss + 1; v-- > 0;) propagate(nodes_[v]);
    clear();
  }

  void clear() { nodes_.clear(); }

 private:
  enum class Op : std::uint8_t {
    kConstant,
    kParam,
    kLookup,
    kMatVec,
    kAdd,
    kConcat,
    kTanh,
    kSigmoid,
    kMul,
    kSum,
    kScale,
    kSoftmax,
    kCrossEntropy,
  };

  struct Node {
    Op op = Op::kConstant;
    Tensor value;
    Tensor grad;
    std::vector<Var> inputs;
    Parameter* param = nullptr;
    std::size_t index = 0;  // lookup row, or cross-entropy gold index
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }

  Tensor& grad_of(Var v) { return nodes_[v].grad; }

  void propagate(Node& n) {
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam:
        for (std::size_t i = 0; i < g.size(); ++i) n.param->grad[i] += g[i];
        break;
      case Op::kLookup: {
        const std::size_t cols = n.param->value.cols();
        for (std::size_t j = 0; j < cols; ++j)
          n.param->grad.at(n.index, j) += g[j];
        break;
      }
      case Op::kMatVec: {
        const Tensor& m = nodes_[n.inputs[0]].value;
        const Tensor& x = nodes_[n.inputs[1]].value;
        Tensor& gm = grad_of(n.inputs[0]);
        Tensor& gx = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < m.rows(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < m.cols(); ++j) {
            gm.at(i, j) += gi * x[j];
            gx[j] += gi * m.at(i, j);
          }
        }
        break;
      }
      case Op::kAdd: {
        Tensor& ga = grad_of(n.inputs[0]);
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (Var v : n.inputs) {
          Tensor& gv = grad_of(v);
          for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += g[off + i];
          off += gv.size();
        }
        break;
      }
      case Op::kTanh: {
        Tensor& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSigmoid: {
        Tensor& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case Op::kMul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        Tensor& ga = grad_of(n.inputs[0]);
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * b[i];
          gb[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kSum:
        for (Var v : n.inputs) {
          Tensor& gv = grad_of(v);
          for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
        }
        break;
      case Op::kScale: {
        const double s = nodes_[n.inputs[0]].value[0];
        const Tensor& x = nodes_[n.inputs[1]].value;
        Tensor& gs = grad_of(n.inputs[0]);
        Tensor& gx = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gs[0] += g[i] * x[i];
          gx[i] += g[i] * s;
        }
        break;
      }
      case Op::kSoftmax: {
        // dx_i = y_i * (g_i - sum_j g_j y_j)
        Tensor& gx = grad_of(n.inputs[0]);
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
        for (std::size_t i = 0; i < g.size(); ++i)
          gx[i] += n.value[i] * (g[i] - dot);
        break;
      }
      case Op::kCrossEntropy: {
        // d/ds = softmax(s) - onehot(gold)
        const Tensor& s = nodes_[n.inputs[0]].value;
        Tensor& gs = grad_of(n.inputs[0]);
        double mx = s[0];
        for (double v : s.data) mx = std::max(mx, v);
        double z = 0.0;
        for (double v : s.data) z += std::exp(v - mx);
        for (std::size_t i = 0; i < s.size(); ++i) {
          double p = std::exp(s[i] - mx) / z;
          gs[i] += g[0] * (p - (i == n.index ? 1.0 : 0.0));
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace tdp
