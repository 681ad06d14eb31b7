#pragma once

#include "poselift/nn/graph.hpp"
#include "poselift/pose.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace poselift {

using Rng = std::mt19937_64;

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// y = W x + b on every column of x.
template <typename Scalar>
typename BasicGraph<Scalar>::Var fc_forward(BasicGraph<Scalar>& g, typename BasicGraph<Scalar>::Var x,
                                            typename BasicGraph<Scalar>::Var W,
                                            typename BasicGraph<Scalar>::Var b) {
  const auto& xv = g.value(x);
  const auto& Wv = g.value(W);
  const auto& bv = g.value(b);
  if (Wv.cols() != xv.rows() || bv.rows() != Wv.rows() || bv.cols() != 1)
    throw DimensionError("fc_forward: W " + shape_str(Wv) + ", x " + shape_str(xv) + ", b " + shape_str(bv));
  return g.add_bias(g.matmul(W, x), b);
}

// Gate order used for every per-gate array below.
enum LstmGate : int { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCellGate = 3 };
inline constexpr std::array<const char*, 4> kLstmGateNames = {"i", "f", "o", "g"};

// Bound LSTM weights: input-to-hidden W, hidden-to-hidden U and bias b per
// gate. There are no peephole terms.
template <typename Scalar>
struct BasicLstmVars {
  using Var = typename BasicGraph<Scalar>::Var;
  std::array<Var, 4> W, U, b;
};
using LstmVars = BasicLstmVars<double>;

template <typename Scalar>
struct BasicLstmOutput {
  typename BasicGraph<Scalar>::Var h, c;
};

template <typename Scalar>
BasicLstmOutput<Scalar> lstm_step(BasicGraph<Scalar>& g, typename BasicGraph<Scalar>::Var x,
                                  typename BasicGraph<Scalar>::Var h_prev,
                                  typename BasicGraph<Scalar>::Var c_prev, const BasicLstmVars<Scalar>& p) {
  const auto hidden = g.value(p.b[0]).rows();
  if (g.value(h_prev).rows() != hidden || g.value(c_prev).rows() != hidden)
    throw DimensionError("lstm_step: state " + shape_str(g.value(h_prev)) + "/" + shape_str(g.value(c_prev)) +
                         " for hidden size " + std::to_string(hidden));
  auto pre = [&](int k) {
    if (g.value(p.U[k]).rows() != hidden || g.value(p.W[k]).rows() != hidden)
      throw DimensionError("lstm_step: gate matrices disagree on hidden size");
    return g.add(fc_forward(g, x, p.W[k], p.b[k]), g.matmul(p.U[k], h_prev));
  };
  auto i = g.sigmoid(pre(kInputGate));
  auto f = g.sigmoid(pre(kForgetGate));
  auto o = g.sigmoid(pre(kOutputGate));
  auto cand = g.tanh(pre(kCellGate));
  auto c = g.add(g.hadamard(f, c_prev), g.hadamard(i, cand));
  auto h = g.hadamard(o, g.tanh(c));
  return {h, c};
}

// Tensor names of one LSTM layer: <prefix>.W_i, <prefix>.U_i, <prefix>.b_i, ...
inline std::string lstm_tensor_name(const std::string& prefix, char kind, int gate) {
  return prefix + "." + kind + "_" + kLstmGateNames[static_cast<std::size_t>(gate)];
}

inline LstmVars bind_lstm(Graph& g, const ParamSet& params, const std::string& prefix) {
  LstmVars v;
  for (int k = 0; k < 4; ++k) {
    v.W[k] = g.param(lstm_tensor_name(prefix, 'W', k), params[lstm_tensor_name(prefix, 'W', k)]);
    v.U[k] = g.param(lstm_tensor_name(prefix, 'U', k), params[lstm_tensor_name(prefix, 'U', k)]);
    v.b[k] = g.param(lstm_tensor_name(prefix, 'b', k), params[lstm_tensor_name(prefix, 'b', k)]);
  }
  return v;
}

enum class BatchNormMode { train, eval };

template <typename Scalar>
struct BatchNormRunning {
  MatrixX<Scalar> mean, var;
};

// Train mode normalizes each feature by the batch statistics and, when update
// is given, writes the momentum-blended running statistics into it (unbiased
// batch variance). Eval mode is a pure affine map of the frozen statistics.
template <typename Scalar>
typename BasicGraph<Scalar>::Var batchnorm_forward(BasicGraph<Scalar>& g, typename BasicGraph<Scalar>::Var x,
                                                   typename BasicGraph<Scalar>::Var gamma,
                                                   typename BasicGraph<Scalar>::Var beta,
                                                   const BatchNormRunning<Scalar>& running, BatchNormMode mode,
                                                   BatchNormRunning<Scalar>* update = nullptr,
                                                   Scalar momentum = Scalar(kBatchNormMomentum),
                                                   Scalar eps = Scalar(kBatchNormEps)) {
  if (mode == BatchNormMode::eval) return g.batchnorm_eval(x, gamma, beta, running.mean, running.var, eps);
  const auto n = g.value(x).cols();
  if (n < 2)
    throw std::invalid_argument("batchnorm_forward: train mode needs a batch of at least 2, got " +
                                std::to_string(n));
  MatrixX<Scalar> mean, var;
  auto y = g.batchnorm_train(x, gamma, beta, eps, &mean, &var);
  if (update) {
    const Scalar unbias = Scalar(n) / Scalar(n - 1);
    update->mean = (Scalar(1) - momentum) * running.mean + momentum * mean;
    update->var = (Scalar(1) - momentum) * running.var + (momentum * unbias) * var;
  }
  return y;
}

template <typename Scalar>
typename BasicGraph<Scalar>::Var mse(BasicGraph<Scalar>& g, typename BasicGraph<Scalar>::Var a,
                                     typename BasicGraph<Scalar>::Var b) {
  return g.mse(a, b);
}

// Value-only sum of squared differences.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mse(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("mse: " + shape_str(a) + " vs " + shape_str(b));
  return (a - b).squaredNorm();
}

inline void check_probability(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("joint dropout probability must lie in [0, 1], got " + std::to_string(delta));
}

// 0/1 mask of shape (dim*joints) x cols; each joint of each column is zeroed
// as a whole with probability delta.
inline Matrix joint_dropout_mask(int joints, int dim, Eigen::Index cols, double delta, Rng& rng) {
  check_probability(delta);
  Matrix m = Matrix::Ones(dim * joints, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int k = 0; k < joints; ++k)
      if (u(rng) < delta) m.col(c).segment(dim * k, dim).setZero();
  return m;
}

// Occlusion-style dropout: survivors are not rescaled.
template <int Dim, typename Scalar>
BasicPose<Dim, Scalar> joint_dropout(const BasicPose<Dim, Scalar>& pose, double delta, Rng& rng) {
  check_probability(delta);
  BasicPose<Dim, Scalar> out = pose;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < pose.joints(); ++k)
    if (u(rng) < delta) out.joint(k).setZero();
  return out;
}

inline Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

// Xavier-initialized fully connected layer <prefix>.W (out x in), <prefix>.b.
void add_fc_params(ParamSet& params, const std::string& prefix, Eigen::Index in, Eigen::Index out, Rng& rng);

// LSTM layer with forget-gate bias 1 and every other bias 0.
void add_lstm_params(ParamSet& params, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng);

// <prefix>.gamma = 1, <prefix>.beta = 0 (trainable); <prefix>.mean = 0 and
// <prefix>.var = 1 (running statistics, not trainable).
void add_batchnorm_params(ParamSet& params, const std::string& prefix, Eigen::Index features);

struct FcVars {
  Var W, b;
};
inline FcVars bind_fc(Graph& g, const ParamSet& params, const std::string& prefix) {
  return {g.param(prefix + ".W", params[prefix + ".W"]), g.param(prefix + ".b", params[prefix + ".b"])};
}
inline Var fc_forward(Graph& g, Var x, const FcVars& fc) { return fc_forward(g, x, fc.W, fc.b); }

// Batch norm layer <prefix> bound from params. In train mode with a non-null
// sink, the updated running statistics are written to sink.
Var batchnorm_layer(Graph& g, Var x, const ParamSet& params, const std::string& prefix, BatchNormMode mode,
                    ParamSet* sink);

}  // namespace poselift
