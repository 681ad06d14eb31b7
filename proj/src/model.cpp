#include "poselift/model.hpp"

#include "poselift/lifter.hpp"
#include "poselift/nn/layers.hpp"

namespace poselift {

ParamSet init_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.joints < 1 || cfg.hidden < 1 || cfg.lstm_layers < 1 || cfg.projector_width < 1)
    throw std::invalid_argument("init_model: all sizes must be positive");
  Rng rng(seed);
  const Eigen::Index k2 = 2 * cfg.joints, k3 = 3 * cfg.joints;
  const Eigen::Index w = cfg.projector_width;
  ParamSet p;
  add_fc_params(p, "enc", k2, cfg.hidden, rng);
  for (int l = 0; l < cfg.lstm_layers; ++l)
    add_lstm_params(p, "lstm" + std::to_string(l), cfg.hidden, cfg.hidden, rng);
  add_fc_params(p, "out", cfg.hidden, k3, rng);

  add_fc_params(p, "reg.fc_a", k3, w, rng);
  add_batchnorm_params(p, "reg.bn_a", w);
  add_fc_params(p, "reg.fc_b", w, k3, rng);

  add_fc_params(p, "proj.fc1", k3, w, rng);
  add_batchnorm_params(p, "proj.bn1", w);
  add_fc_params(p, "proj.fc2", w, w, rng);
  add_batchnorm_params(p, "proj.bn2", w);
  add_fc_params(p, "proj.fc3", w, w, rng);
  add_fc_params(p, "proj.fc4", w, k2, rng);
  return p;
}

ModelConfig infer_model_config(const ParamSet& params) {
  ModelConfig cfg;
  cfg.joints = static_cast<int>(params["out.b"].rows() / 3);
  cfg.hidden = lifter_hidden_size(params);
  cfg.lstm_layers = lstm_layer_count(params);
  cfg.projector_width = static_cast<int>(params["reg.fc_a.b"].rows());
  if (cfg.lstm_layers < 1) throw std::invalid_argument("infer_model_config: no LSTM layers");
  return cfg;
}

}  // namespace poselift
