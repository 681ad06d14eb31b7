#pragma once

#include "poselift/nn/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace poselift {

// Network sizes. hidden is the encoder/LSTM width and projector_width the
// width of the regression and projection layers.
struct ModelConfig {
  int joints = 14;
  int hidden = 1024;
  int lstm_layers = 2;
  int projector_width = 1024;

  bool operator==(const ModelConfig&) const = default;
};

// Tensor name prefixes of the three parameter groups.
inline const std::vector<std::string> kLifterPrefixes = {"enc.", "lstm", "out."};
inline const std::vector<std::string> kProjectorPrefixes = {"reg.", "proj."};

// Xavier-initialized encoder, LSTM stack, output layer, regression and
// projection networks.
ParamSet init_model(const ModelConfig& cfg, std::uint64_t seed);

// Recover sizes from tensor shapes (throws if the set is incomplete).
ModelConfig infer_model_config(const ParamSet& params);

}  // namespace poselift
