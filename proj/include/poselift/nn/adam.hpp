#pragma once

#include "poselift/nn/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace poselift {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments for a fixed list of tensors. Tensors outside the list are never
// touched by adam_step.
struct AdamState {
  AdamHyper hyper;
  std::map<std::string, Matrix> m, v;
  long step = 0;

  AdamState() = default;
  AdamState(const ParamSet& params, const std::vector<std::string>& names, AdamHyper hyper);
};

// One bias-corrected Adam update of every tensor tracked by state.
// Throws std::out_of_range if a tracked tensor has no gradient.
void adam_step(ParamSet& params, const std::map<std::string, Matrix>& grads, AdamState& state);

}  // namespace poselift
