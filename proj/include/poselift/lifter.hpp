#pragma once

#include "poselift/nn/graph.hpp"
#include "poselift/pose.hpp"

#include <span>
#include <vector>

namespace poselift {

// Normalized 2D inputs must stay inside this band around [0, 1].
inline constexpr double kNormalizedGuardLow = -0.5;
inline constexpr double kNormalizedGuardHigh = 1.5;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Per-layer hidden and cell states, each hidden x batch.
struct LifterState {
  std::vector<Var> h, c;
};

int lstm_layer_count(const ParamSet& params);
int lifter_hidden_size(const ParamSet& params);

// All-zero state for a batch of the given size.
LifterState zero_state(Graph& g, const ParamSet& params, Eigen::Index batch);

// ReLU(FC(p2d)). p2d is 2K x batch in normalized units.
Var encode_2d(Graph& g, Var p2d, const ParamSet& params);

struct LiftStepResult {
  Var pose3d;
  LifterState state;
};

// Feature -> LSTM stack -> output FC.
LiftStepResult lift_step(Graph& g, Var feature, const LifterState& state, const ParamSet& params);

// Encodes and lifts frames in order from a zero state. Each element of frames
// is 2K x batch; the result holds one 3K x batch pose per frame.
std::vector<Var> lift_sequence(Graph& g, std::span<const Var> frames, const ParamSet& params);

// Sum over frames of the squared 3D error.
Var lifter_loss(Graph& g, std::span<const Var> pred, std::span<const Var> gt);

// Value-level wrappers.
Vector encode_2d(const Pose2D& p2d, const ParamSet& params);
std::vector<Pose3D> lift_sequence(std::span<const Pose2D> seq, const ParamSet& params);
double lifter_loss(std::span<const Pose3D> pred, std::span<const Pose3D> gt);

}  // namespace poselift
