#pragma once

#include "poselift/nn/graph.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace poselift {

struct GradcheckOptions {
  double step = 1e-5;       // central-difference step
  double tolerance = 1e-4;  // per-entry relative error bound
  // An entry is compared as |a - n| / max(|a|, |n|, floor * s) where s is
  // the largest of 1, |loss| and every analytic gradient entry.
  double floor = 1e-5;
  int seeds = 20;
};

struct GradcheckResult {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  std::string worst_entry;
  bool passed = false;
};

// Builds a scalar loss from the tensors of params (every trainable tensor
// must be bound with Graph::param under its own name).
using LossBuilder = std::function<Var(Graph&, const ParamSet&)>;

// Compares reverse-mode gradients with central differences entry by entry.
GradcheckResult check_gradients(const std::string& name, const LossBuilder& build, const ParamSet& params,
                                const GradcheckOptions& opts = {});

// Smallest |input| over every ReLU on the tape; FD is unreliable near zero.
double relu_margin(const Graph& g);

// Every primitive and composite loss of the model over opts.seeds seeds
// starting at first_seed.
std::vector<GradcheckResult> run_gradcheck(std::uint64_t first_seed, const GradcheckOptions& opts = {});

}  // namespace poselift
