#pragma once

#include "poselift/data/checkpoint.hpp"
#include "poselift/data/dataset.hpp"
#include "poselift/model.hpp"
#include "poselift/nn/layers.hpp"
#include "poselift/normalize.hpp"
#include "poselift/ssc.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poselift {

struct TrainConfig {
  ModelConfig model;  // joints is taken from the data
  int clip_len = 8;
  double lr = 1e-5;
  int batch_size = 16;
  int steps_a = 2000;  // lifter (encoder + LSTM + output layer)
  int steps_b = 1000;  // regression + projection networks, lifter frozen
  int steps_c = 1000;  // everything jointly
  double lambda_3d = 1.0;
  double lambda_init = 1.0;
  double lambda_proj = 1.0;
  double delta = 0.3;
  double scale_min = 0.9;
  double scale_max = 1.1;
  int ratio_2d = 1;  // 2D-only batches per 3D batch in the joint stage
  std::uint64_t seed = 0;
  RefineConfig refine;  // inference-time defaults

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const RefineConfig& c);
void from_json(const nlohmann::json& j, RefineConfig& c);

TrainConfig load_train_config(const std::filesystem::path& path);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clip = std::vector<FrameRecord>;

// Consecutive non-overlapping windows of n frames; a shorter tail is dropped.
std::vector<Clip> make_clips(std::span<const FrameRecord> seq, int n);

// A batch of equally long clips, normalized, frame-major: p2d[t] is 2K x B.
// p3d is empty for 2D-only batches.
struct ClipBatch {
  std::vector<Matrix> p2d;
  std::vector<Matrix> p3d;

  bool has_3d() const { return !p3d.empty(); }
  int frames() const { return static_cast<int>(p2d.size()); }
  Eigen::Index size() const { return p2d.empty() ? 0 : p2d.front().cols(); }
};

// scales (one per clip, may be empty) scale each frame's 2D and 3D pose about
// its own centroid before normalization. Throws if a clip mixes 3D-annotated
// and 2D-only frames or the batch mixes both kinds of clips.
ClipBatch make_clip_batch(std::span<const Clip* const> clips, const NormStats& stats,
                          std::span<const double> scales = {});

struct MixedLoss {
  Var total;
  Var sequence3d;   // sum_t ||p3d_t - gt3d_t||^2 (3D clips only)
  Var init;         // regression + projection supervision (3D clips only)
  Var consistency;  // sum_t ||p2d_t - Psi_P(Psi_C(p3d_t))||^2
};

// Joint-stage objective. 3D clips: lambda_3d * sequence3d + lambda_init * init
// + lambda_proj * consistency; 2D-only clips: lambda_proj * consistency.
// dropout_mask (3K x frames*B, frame-major) zeroes lifted joints before Psi_C.
MixedLoss mixed_batch_loss(Graph& g, const ClipBatch& batch, const ParamSet& params, const TrainConfig& cfg,
                           const Matrix* dropout_mask = nullptr, BatchNormMode mode = BatchNormMode::eval,
                           ParamSet* sink = nullptr);
double mixed_batch_loss(const ClipBatch& batch, const ParamSet& params, const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> stage_a, stage_b, stage_c;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

// Three-stage trainer: lifter on 3D clips, then the projector pair on frozen
// lifter outputs with joint dropout, then all parameters on interleaved 3D
// and 2D-only clips. Each stage starts a fresh Adam state.
class Trainer {
 public:
  using StepCallback = std::function<void(char stage, int step, double loss)>;

  Trainer(const SequenceDataset& data3d, const SequenceDataset& data2d, TrainConfig cfg);

  void stage_a(int steps);
  void stage_b(int steps);
  void stage_c(int steps);
  TrainResult run();

  const ParamSet& params() const { return params_; }
  const NormStats& stats() const { return stats_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<Clip>& clips_3d() const { return clips3d_; }
  const std::vector<Clip>& clips_2d() const { return clips2d_; }
  const TrainHistory& history() const { return history_; }
  Checkpoint checkpoint() const;

  void on_step(StepCallback cb) { callback_ = std::move(cb); }

  // Regression + projection loss over every 3D frame, lifter outputs as
  // input, no dropout, eval-mode batch norm.
  double projector_loss_all() const;
  // Sequence 3D loss over every 3D clip.
  double lifter_loss_all() const;

 private:
  std::vector<const Clip*> draw(const std::vector<Clip>& clips, std::vector<std::size_t>& order, std::size_t& cursor);
  std::vector<double> draw_scales(std::size_t n);
  Matrix lift_values(const ClipBatch& batch) const;
  void check_finite(double loss, char stage, int step) const;

  TrainConfig cfg_;
  int joints_;
  std::vector<std::string> joint_names_;
  NormStats stats_;
  ParamSet params_;
  std::vector<Clip> clips3d_, clips2d_;
  std::vector<std::size_t> order3d_, order2d_;
  std::size_t cursor3d_ = 0, cursor2d_ = 0;
  Rng rng_;
  TrainHistory history_;
  StepCallback callback_;
};

TrainResult train(const SequenceDataset& data3d, const SequenceDataset& data2d, const TrainConfig& cfg);

}  // namespace poselift
