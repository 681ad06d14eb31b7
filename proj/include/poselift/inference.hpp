#pragma once

#include "poselift/data/checkpoint.hpp"
#include "poselift/data/dataset.hpp"
#include "poselift/data/metrics.hpp"
#include "poselift/ssc.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poselift {

struct InferOptions {
  bool ssc = true;
  // Reset the lifter state before every frame instead of every clip_len frames.
  bool single_frame = false;
  RefineConfig refine;  // robust_joints empty: resolved from the joint names
  int threads = 0;      // 0: thread_cap()
  // Refine against these 2D poses (matched by sequence id and frame index)
  // instead of the lifter's own input.
  const SequenceDataset* ssc_targets = nullptr;
};

struct FramePrediction {
  std::string seq_id;
  long t = 0;
  Pose3D pose_mm;
  std::optional<RefineReport> report;
};

// Worker count from POSELIFT_THREADS, else the hardware concurrency (>= 1).
int thread_cap();

// Lifts each window of clip_len frames from a zero state (a shorter tail is
// lifted as its own window), then reads out Psi_C with or without per-frame
// refinement and denormalizes to millimeters.
std::vector<FramePrediction> infer_sequence(const Checkpoint& ckpt, const Sequence& seq, const InferOptions& opts);

// Sequences run in parallel; output keeps dataset order.
std::vector<FramePrediction> infer_dataset(const Checkpoint& ckpt, const SequenceDataset& data,
                                           const InferOptions& opts);

// JSON Lines of {"seq_id","t","pose3d_mm","ssc"}; "ssc" is null without refinement.
void write_predictions(std::ostream& out, const std::vector<FramePrediction>& preds);
std::vector<FramePrediction> read_predictions(const std::filesystem::path& path);
void write_predictions_csv(std::ostream& out, const std::vector<FramePrediction>& preds);

struct EvalReport {
  std::map<std::string, double> per_sequence;  // MPJPE in mm
  double overall = 0.0;
  std::size_t frames = 0;
};

// Matches predictions to ground-truth frames by (seq_id, t). Every prediction
// must have a 3D ground truth.
EvalReport evaluate(const std::vector<FramePrediction>& preds, const SequenceDataset& gt, Alignment align);

}  // namespace poselift
