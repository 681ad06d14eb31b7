#include "poselift/lifter.hpp"

#include "poselift/nn/layers.hpp"

#include <string>

namespace poselift {

int lstm_layer_count(const ParamSet& params) {
  int n = 0;
  while (params.contains("lstm" + std::to_string(n) + ".b_i")) ++n;
  return n;
}

int lifter_hidden_size(const ParamSet& params) { return static_cast<int>(params["enc.b"].rows()); }

LifterState zero_state(Graph& g, const ParamSet& params, Eigen::Index batch) {
  LifterState s;
  const int layers = lstm_layer_count(params);
  for (int l = 0; l < layers; ++l) {
    const auto hidden = params["lstm" + std::to_string(l) + ".b_i"].rows();
    s.h.push_back(g.constant(Matrix::Zero(hidden, batch)));
    s.c.push_back(g.constant(Matrix::Zero(hidden, batch)));
  }
  return s;
}

Var encode_2d(Graph& g, Var p2d, const ParamSet& params) {
  const Matrix& x = g.value(p2d);
  if (x.size() > 0 && (x.minCoeff() < kNormalizedGuardLow || x.maxCoeff() > kNormalizedGuardHigh))
    throw ValidationError("encode_2d: input outside the normalized band [" + std::to_string(kNormalizedGuardLow) +
                          ", " + std::to_string(kNormalizedGuardHigh) + "]; was it normalized?");
  return g.relu(fc_forward(g, p2d, bind_fc(g, params, "enc")));
}

LiftStepResult lift_step(Graph& g, Var feature, const LifterState& state, const ParamSet& params) {
  const int layers = lstm_layer_count(params);
  if (static_cast<int>(state.h.size()) != layers || static_cast<int>(state.c.size()) != layers)
    throw DimensionError("lift_step: state has " + std::to_string(state.h.size()) + " layers, model has " +
                         std::to_string(layers));
  LiftStepResult out;
  Var x = feature;
  for (int l = 0; l < layers; ++l) {
    auto cell = lstm_step(g, x, state.h[l], state.c[l], bind_lstm(g, params, "lstm" + std::to_string(l)));
    out.state.h.push_back(cell.h);
    out.state.c.push_back(cell.c);
    x = cell.h;
  }
  out.pose3d = fc_forward(g, x, bind_fc(g, params, "out"));
  return out;
}

std::vector<Var> lift_sequence(Graph& g, std::span<const Var> frames, const ParamSet& params) {
  if (frames.empty()) throw std::invalid_argument("lift_sequence: empty sequence");
  LifterState state = zero_state(g, params, g.value(frames.front()).cols());
  std::vector<Var> poses;
  poses.reserve(frames.size());
  for (Var f : frames) {
    auto step = lift_step(g, encode_2d(g, f, params), state, params);
    poses.push_back(step.pose3d);
    state = std::move(step.state);
  }
  return poses;
}

Var lifter_loss(Graph& g, std::span<const Var> pred, std::span<const Var> gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("lifter_loss: " + std::to_string(pred.size()) + " predictions vs " +
                                std::to_string(gt.size()) + " targets");
  if (pred.empty()) return g.constant(Matrix::Zero(1, 1));
  Var total = g.mse(pred[0], gt[0]);
  for (std::size_t t = 1; t < pred.size(); ++t) total = g.add(total, g.mse(pred[t], gt[t]));
  return total;
}

Vector encode_2d(const Pose2D& p2d, const ParamSet& params) {
  Graph g;
  return g.value(encode_2d(g, g.constant(p2d.coords()), params)).col(0);
}

std::vector<Pose3D> lift_sequence(std::span<const Pose2D> seq, const ParamSet& params) {
  Graph g;
  std::vector<Var> frames;
  frames.reserve(seq.size());
  for (const auto& p : seq) frames.push_back(g.constant(p.coords()));
  std::vector<Pose3D> out;
  for (Var v : lift_sequence(g, frames, params)) out.emplace_back(Vector(g.value(v).col(0)));
  return out;
}

double lifter_loss(std::span<const Pose3D> pred, std::span<const Pose3D> gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("lifter_loss: " + std::to_string(pred.size()) + " predictions vs " +
                                std::to_string(gt.size()) + " targets");
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += mse(pred[t].coords(), gt[t].coords());
  return total;
}

}  // namespace poselift
