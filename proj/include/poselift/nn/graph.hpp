#pragma once

#include "poselift/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace poselift {

// Reverse-mode tape over dense matrices. Every operation appends one node
// whose inputs were created before it, so node order is a topological order
// and backward() is a single reverse sweep.
//
// Columns are samples: a batch of B poses of dimension D is a D x B matrix.
// A graph and everything recorded on it belong to one thread.
template <typename Scalar>
class BasicGraph {
 public:
  using Matrix = MatrixX<Scalar>;
  using Gradients = std::map<std::string, Matrix>;

  class Var {
   public:
    Var() = default;
    std::size_t id() const { return id_; }
    bool valid() const { return id_ != kInvalid; }

   private:
    friend class BasicGraph;
    static constexpr std::size_t kInvalid = static_cast<std::size_t>(-1);
    explicit Var(std::size_t id) : id_(id) {}
    std::size_t id_ = kInvalid;
  };

  struct Node {
    const char* op = "";
    std::vector<std::size_t> inputs;
    Matrix value;
    bool needs_grad = false;
    std::string param_name;
    std::function<void(BasicGraph&, std::size_t)> back;
  };

  BasicGraph() = default;
  BasicGraph(const BasicGraph&) = delete;
  BasicGraph& operator=(const BasicGraph&) = delete;

  Var constant(Matrix value) { return push("constant", {}, std::move(value), false, nullptr); }

  // A trainable leaf. Binding the same name twice returns the first node, so a
  // weight shared across time steps accumulates one gradient.
  Var param(const std::string& name, const Matrix& value) {
    if (auto it = params_.find(name); it != params_.end()) return Var(it->second);
    Var v = push("param", {}, value, true, nullptr);
    nodes_[v.id()].param_name = name;
    params_.emplace(name, v.id());
    return v;
  }

  const Matrix& value(Var v) const { return node(v).value; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows())
      throw DimensionError("matmul: " + shape_str(A) + " * " + shape_str(B));
    return push("matmul", {a.id(), b.id()}, A * B, any_grad(a, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  const Matrix& dy = g.grads_[self];
                  const std::size_t ia = n.inputs[0], ib = n.inputs[1];
                  if (g.nodes_[ia].needs_grad) g.accumulate(ia, dy * g.nodes_[ib].value.transpose());
                  if (g.nodes_[ib].needs_grad) g.accumulate(ib, g.nodes_[ia].value.transpose() * dy);
                });
  }

  Var add(Var a, Var b) {
    require_same("add", a, b);
    return push("add", {a.id(), b.id()}, value(a) + value(b), any_grad(a, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  for (std::size_t in : n.inputs)
                    if (g.nodes_[in].needs_grad) g.accumulate(in, g.grads_[self]);
                });
  }

  Var sub(Var a, Var b) {
    require_same("sub", a, b);
    return push("sub", {a.id(), b.id()}, value(a) - value(b), any_grad(a, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  if (g.nodes_[n.inputs[0]].needs_grad) g.accumulate(n.inputs[0], g.grads_[self]);
                  if (g.nodes_[n.inputs[1]].needs_grad) g.accumulate(n.inputs[1], -g.grads_[self]);
                });
  }

  // x (D x B) plus column vector b (D x 1) broadcast over samples.
  Var add_bias(Var x, Var b) {
    const Matrix& X = value(x);
    const Matrix& bias = value(b);
    if (bias.cols() != 1 || bias.rows() != X.rows())
      throw DimensionError("add_bias: " + shape_str(X) + " + " + shape_str(bias));
    Matrix y = X.colwise() + bias.col(0);
    return push("add", {x.id(), b.id()}, std::move(y), any_grad(x, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  const Matrix& dy = g.grads_[self];
                  if (g.nodes_[n.inputs[0]].needs_grad) g.accumulate(n.inputs[0], dy);
                  if (g.nodes_[n.inputs[1]].needs_grad) g.accumulate(n.inputs[1], dy.rowwise().sum());
                });
  }

  Var hadamard(Var a, Var b) {
    require_same("hadamard", a, b);
    return push("hadamard", {a.id(), b.id()}, value(a).cwiseProduct(value(b)), any_grad(a, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  const Matrix& dy = g.grads_[self];
                  const std::size_t ia = n.inputs[0], ib = n.inputs[1];
                  if (g.nodes_[ia].needs_grad) g.accumulate(ia, dy.cwiseProduct(g.nodes_[ib].value));
                  if (g.nodes_[ib].needs_grad) g.accumulate(ib, dy.cwiseProduct(g.nodes_[ia].value));
                });
  }

  Var scale(Var a, Scalar s) {
    return push("scale", {a.id()}, value(a) * s, node(a).needs_grad,
                [s](BasicGraph& g, std::size_t self) {
                  g.accumulate(g.nodes_[self].inputs[0], g.grads_[self] * s);
                });
  }

  // Elementwise product with a constant mask.
  Var mask(Var a, const Matrix& m) {
    if (m.rows() != value(a).rows() || m.cols() != value(a).cols())
      throw DimensionError("mask: " + shape_str(value(a)) + " vs " + shape_str(m));
    return push("hadamard", {a.id()}, value(a).cwiseProduct(m), node(a).needs_grad,
                [m](BasicGraph& g, std::size_t self) {
                  g.accumulate(g.nodes_[self].inputs[0], g.grads_[self].cwiseProduct(m));
                });
  }

  Var relu(Var a) {
    return push("relu", {a.id()}, value(a).cwiseMax(Scalar(0)), node(a).needs_grad,
                [](BasicGraph& g, std::size_t self) {
                  const std::size_t in = g.nodes_[self].inputs[0];
                  const Matrix& x = g.nodes_[in].value;
                  g.accumulate(in, (x.array() > Scalar(0)).select(g.grads_[self], Scalar(0)));
                });
  }

  Var sigmoid(Var a) {
    Matrix y = (Scalar(1) + (-value(a).array()).exp()).inverse().matrix();
    return push("sigmoid", {a.id()}, std::move(y), node(a).needs_grad,
                [](BasicGraph& g, std::size_t self) {
                  const auto& y = g.nodes_[self].value.array();
                  g.accumulate(g.nodes_[self].inputs[0],
                               (g.grads_[self].array() * y * (Scalar(1) - y)).matrix());
                });
  }

  Var tanh(Var a) {
    Matrix y = value(a).array().tanh().matrix();
    return push("tanh", {a.id()}, std::move(y), node(a).needs_grad,
                [](BasicGraph& g, std::size_t self) {
                  const auto& y = g.nodes_[self].value.array();
                  g.accumulate(g.nodes_[self].inputs[0],
                               (g.grads_[self].array() * (Scalar(1) - y.square())).matrix());
                });
  }

  Var sum(Var a) {
    Matrix y(1, 1);
    y(0, 0) = value(a).sum();
    return push("sum", {a.id()}, std::move(y), node(a).needs_grad,
                [](BasicGraph& g, std::size_t self) {
                  const std::size_t in = g.nodes_[self].inputs[0];
                  const Matrix& x = g.nodes_[in].value;
                  g.accumulate(in, Matrix::Constant(x.rows(), x.cols(), g.grads_[self](0, 0)));
                });
  }

  // Horizontal concatenation [a0 a1 ...]; all parts share a row count.
  Var hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("hcat: no inputs");
    const auto rows = value(parts.front()).rows();
    Eigen::Index cols = 0;
    bool ng = false;
    std::vector<std::size_t> ids;
    for (Var p : parts) {
      if (value(p).rows() != rows)
        throw DimensionError("hcat: " + shape_str(value(parts.front())) + " vs " + shape_str(value(p)));
      cols += value(p).cols();
      ng = ng || node(p).needs_grad;
      ids.push_back(p.id());
    }
    Matrix y(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      y.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    return push("hcat", std::move(ids), std::move(y), ng, [](BasicGraph& g, std::size_t self) {
      Eigen::Index at = 0;
      for (std::size_t in : g.nodes_[self].inputs) {
        const auto c = g.nodes_[in].value.cols();
        if (g.nodes_[in].needs_grad) g.accumulate(in, g.grads_[self].middleCols(at, c));
        at += c;
      }
    });
  }

  // Columns [first, first + count) of a.
  Var cols(Var a, Eigen::Index first, Eigen::Index count) {
    const Matrix& A = value(a);
    if (first < 0 || count < 0 || first + count > A.cols())
      throw DimensionError("cols: range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                           ") of " + shape_str(A));
    return push("cols", {a.id()}, A.middleCols(first, count), node(a).needs_grad,
                [first](BasicGraph& g, std::size_t self) {
                  const std::size_t in = g.nodes_[self].inputs[0];
                  const Matrix& x = g.nodes_[in].value;
                  Matrix d = Matrix::Zero(x.rows(), x.cols());
                  d.middleCols(first, g.grads_[self].cols()) = g.grads_[self];
                  g.accumulate(in, d);
                });
  }

  // Unaveraged sum of squared differences.
  Var mse(Var a, Var b) {
    require_same("mse", a, b);
    Matrix y(1, 1);
    y(0, 0) = (value(a) - value(b)).squaredNorm();
    return push("mse", {a.id(), b.id()}, std::move(y), any_grad(a, b),
                [](BasicGraph& g, std::size_t self) {
                  const Node& n = g.nodes_[self];
                  const std::size_t ia = n.inputs[0], ib = n.inputs[1];
                  const Matrix d = (g.nodes_[ia].value - g.nodes_[ib].value) * (Scalar(2) * g.grads_[self](0, 0));
                  if (g.nodes_[ia].needs_grad) g.accumulate(ia, d);
                  if (g.nodes_[ib].needs_grad) g.accumulate(ib, -d);
                });
  }

  // Batch normalization over columns using the batch's own statistics.
  // Writes the per-feature biased mean/variance to the optional outputs.
  Var batchnorm_train(Var x, Var gamma, Var beta, Scalar eps, Matrix* batch_mean = nullptr,
                      Matrix* batch_var = nullptr) {
    const Matrix& X = value(x);
    require_feature_vec("batchnorm", X, value(gamma));
    require_feature_vec("batchnorm", X, value(beta));
    const auto n = static_cast<Scalar>(X.cols());
    Matrix mean = X.rowwise().sum() / n;
    Matrix centered = X.colwise() - mean.col(0);
    Matrix var = centered.array().square().rowwise().sum().matrix() / n;
    Matrix inv_std = (var.array() + eps).rsqrt().matrix();
    Matrix xhat = centered.array().colwise() * inv_std.col(0).array();
    Matrix y = (xhat.array().colwise() * value(gamma).col(0).array()).colwise() + value(beta).col(0).array();
    if (batch_mean) *batch_mean = mean;
    if (batch_var) *batch_var = var;
    bool ng = node(x).needs_grad || node(gamma).needs_grad || node(beta).needs_grad;
    return push("batchnorm", {x.id(), gamma.id(), beta.id()}, std::move(y), ng,
                [xhat = std::move(xhat), inv_std = std::move(inv_std)](BasicGraph& g, std::size_t self) {
                  const Node& nd = g.nodes_[self];
                  const Matrix& dy = g.grads_[self];
                  const std::size_t ix = nd.inputs[0], ig = nd.inputs[1], ib = nd.inputs[2];
                  if (g.nodes_[ig].needs_grad) g.accumulate(ig, dy.cwiseProduct(xhat).rowwise().sum());
                  if (g.nodes_[ib].needs_grad) g.accumulate(ib, dy.rowwise().sum());
                  if (g.nodes_[ix].needs_grad) {
                    const auto m = static_cast<Scalar>(dy.cols());
                    Matrix dxhat = dy.array().colwise() * g.nodes_[ig].value.col(0).array();
                    Matrix sum_d = dxhat.rowwise().sum();
                    Matrix sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
                    Matrix dx = (m * dxhat).colwise() - sum_d.col(0);
                    dx -= (xhat.array().colwise() * sum_dx.col(0).array()).matrix();
                    dx = dx.array().colwise() * (inv_std.col(0).array() / m);
                    g.accumulate(ix, dx);
                  }
                });
  }

  // Batch normalization with frozen statistics: a per-feature affine map.
  Var batchnorm_eval(Var x, Var gamma, Var beta, const Matrix& mean, const Matrix& var, Scalar eps) {
    const Matrix& X = value(x);
    require_feature_vec("batchnorm", X, value(gamma));
    require_feature_vec("batchnorm", X, value(beta));
    require_feature_vec("batchnorm", X, mean);
    require_feature_vec("batchnorm", X, var);
    Matrix inv_std = (var.array() + eps).rsqrt().matrix();
    Matrix xhat = (X.colwise() - mean.col(0)).array().colwise() * inv_std.col(0).array();
    Matrix y = (xhat.array().colwise() * value(gamma).col(0).array()).colwise() + value(beta).col(0).array();
    bool ng = node(x).needs_grad || node(gamma).needs_grad || node(beta).needs_grad;
    return push("batchnorm", {x.id(), gamma.id(), beta.id()}, std::move(y), ng,
                [xhat = std::move(xhat), inv_std = std::move(inv_std)](BasicGraph& g, std::size_t self) {
                  const Node& nd = g.nodes_[self];
                  const Matrix& dy = g.grads_[self];
                  const std::size_t ix = nd.inputs[0], ig = nd.inputs[1], ib = nd.inputs[2];
                  if (g.nodes_[ig].needs_grad) g.accumulate(ig, dy.cwiseProduct(xhat).rowwise().sum());
                  if (g.nodes_[ib].needs_grad) g.accumulate(ib, dy.rowwise().sum());
                  if (g.nodes_[ix].needs_grad)
                    g.accumulate(ix, (dy.array().colwise() *
                                      (g.nodes_[ig].value.col(0).array() * inv_std.col(0).array()))
                                         .matrix());
                });
  }

  // Gradient of a scalar node with respect to every bound parameter. Parameters
  // the loss does not depend on receive a zero gradient.
  Gradients backward(Var loss) {
    const Matrix& L = value(loss);
    if (L.rows() != 1 || L.cols() != 1)
      throw DimensionError("backward: loss must be scalar, got " + shape_str(L));
    grads_.assign(nodes_.size(), Matrix());
    grads_[loss.id()] = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      if (!nodes_[i].needs_grad || grads_[i].size() == 0 || !nodes_[i].back) continue;
      nodes_[i].back(*this, i);
    }
    Gradients out;
    for (const auto& [name, id] : params_) {
      const Matrix& v = nodes_[id].value;
      out.emplace(name, grads_[id].size() ? grads_[id] : Matrix::Zero(v.rows(), v.cols()));
    }
    grads_.clear();
    return out;
  }

 private:
  const Node& node(Var v) const {
    if (!v.valid() || v.id() >= nodes_.size()) throw std::out_of_range("graph: invalid variable");
    return nodes_[v.id()];
  }

  bool any_grad(Var a, Var b) const { return node(a).needs_grad || node(b).needs_grad; }

  void require_same(const char* op, Var a, Var b) const {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
      throw DimensionError(std::string(op) + ": " + shape_str(A) + " vs " + shape_str(B));
  }

  static void require_feature_vec(const char* op, const Matrix& x, const Matrix& v) {
    if (v.cols() != 1 || v.rows() != x.rows())
      throw DimensionError(std::string(op) + ": features " + shape_str(x) + " vs " + shape_str(v));
  }

  Var push(const char* op, std::vector<std::size_t> inputs, Matrix value, bool needs_grad,
           std::function<void(BasicGraph&, std::size_t)> back) {
    nodes_.push_back(Node{op, std::move(inputs), std::move(value), needs_grad, {}, std::move(back)});
    return Var(nodes_.size() - 1);
  }

  template <typename Expr>
  void accumulate(std::size_t id, const Expr& delta) {
    if (grads_[id].size() == 0)
      grads_[id] = delta;
    else
      grads_[id] += delta;
  }

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::unordered_map<std::string, std::size_t> params_;
};

using Graph = BasicGraph<double>;
using Var = Graph::Var;

}  // namespace poselift
