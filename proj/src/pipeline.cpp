#include "poselift/pipeline.hpp"

#include "poselift/lifter.hpp"
#include "poselift/nn/adam.hpp"
#include "poselift/projector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace poselift {

using nlohmann::json;

void TrainConfig::validate() const {
  if (clip_len < 1) throw std::invalid_argument("config: clip_len must be at least 1");
  if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be at least 1");
  if (steps_a < 0 || steps_b < 0 || steps_c < 0) throw std::invalid_argument("config: negative step count");
  if (lambda_3d < 0.0 || lambda_init < 0.0 || lambda_proj < 0.0)
    throw std::invalid_argument("config: loss weights must be non-negative");
  check_probability(delta);
  if (!(scale_min > 0.0) || scale_min > scale_max) throw std::invalid_argument("config: bad scale range");
  if (ratio_2d < 0) throw std::invalid_argument("config: ratio_2d must be non-negative");
  if (model.hidden < 1 || model.lstm_layers < 1 || model.projector_width < 1)
    throw std::invalid_argument("config: model sizes must be positive");
}

void to_json(json& j, const RefineConfig& c) {
  j = json{{"max_iters", c.max_iters},
           {"step_size", c.step_size},
           {"eps", c.eps_mm},
           {"tau", c.tau_mm},
           {"optimizer", c.optimizer == RefineOptimizer::adam ? "adam" : "sgd"}};
}

void from_json(const json& j, RefineConfig& c) {
  static const std::set<std::string> known = {"max_iters", "step_size", "eps", "tau", "optimizer"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("refine config: unknown key '" + key + "'");
  c.max_iters = j.value("max_iters", c.max_iters);
  c.step_size = j.value("step_size", c.step_size);
  c.eps_mm = j.value("eps", c.eps_mm);
  c.tau_mm = j.value("tau", c.tau_mm);
  if (j.contains("optimizer")) {
    const auto o = j["optimizer"].get<std::string>();
    if (o != "adam" && o != "sgd") throw std::invalid_argument("refine config: optimizer must be adam or sgd");
    c.optimizer = o == "adam" ? RefineOptimizer::adam : RefineOptimizer::sgd;
  }
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"clip_len", c.clip_len},
           {"lr", c.lr},
           {"batch_size", c.batch_size},
           {"steps_a", c.steps_a},
           {"steps_b", c.steps_b},
           {"steps_c", c.steps_c},
           {"lambda_3d", c.lambda_3d},
           {"lambda_init", c.lambda_init},
           {"lambda_proj", c.lambda_proj},
           {"delta", c.delta},
           {"scale_range", {c.scale_min, c.scale_max}},
           {"ratio_2d", c.ratio_2d},
           {"seed", c.seed},
           {"hidden", c.model.hidden},
           {"lstm_layers", c.model.lstm_layers},
           {"projector_width", c.model.projector_width},
           {"refine", c.refine}};
}

void from_json(const json& j, TrainConfig& c) {
  static const std::set<std::string> known = {
      "clip_len",  "lr",          "batch_size",  "steps_a",    "steps_b", "steps_c", "lambda_3d",
      "lambda_init", "lambda_proj", "delta",     "scale_range", "ratio_2d", "seed",  "hidden",
      "lstm_layers", "projector_width", "refine"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("train config: unknown key '" + key + "'");
  c.clip_len = j.value("clip_len", c.clip_len);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps_a = j.value("steps_a", c.steps_a);
  c.steps_b = j.value("steps_b", c.steps_b);
  c.steps_c = j.value("steps_c", c.steps_c);
  c.lambda_3d = j.value("lambda_3d", c.lambda_3d);
  c.lambda_init = j.value("lambda_init", c.lambda_init);
  c.lambda_proj = j.value("lambda_proj", c.lambda_proj);
  c.delta = j.value("delta", c.delta);
  if (j.contains("scale_range")) {
    const auto r = j["scale_range"].get<std::vector<double>>();
    if (r.size() != 2) throw std::invalid_argument("train config: scale_range needs two values");
    c.scale_min = r[0];
    c.scale_max = r[1];
  }
  c.ratio_2d = j.value("ratio_2d", c.ratio_2d);
  c.seed = j.value("seed", c.seed);
  c.model.hidden = j.value("hidden", c.model.hidden);
  c.model.lstm_layers = j.value("lstm_layers", c.model.lstm_layers);
  c.model.projector_width = j.value("projector_width", c.model.projector_width);
  if (j.contains("refine")) from_json(j["refine"], c.refine);
  c.validate();
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  try {
    return json::parse(in).get<TrainConfig>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::vector<Clip> make_clips(std::span<const FrameRecord> seq, int n) {
  if (n < 1) throw std::invalid_argument("make_clips: clip length must be at least 1");
  std::vector<Clip> out;
  const std::size_t len = static_cast<std::size_t>(n);
  for (std::size_t at = 0; at + len <= seq.size(); at += len) out.emplace_back(seq.begin() + at, seq.begin() + at + len);
  return out;
}

namespace {

template <int Dim>
Vector scaled_about_centroid(const BasicPose<Dim>& p, double s) {
  if (s == 1.0) return p.coords();
  Eigen::Matrix<double, Dim, 1> c = Eigen::Matrix<double, Dim, 1>::Zero();
  for (int k = 0; k < p.joints(); ++k) c += p.joint(k);
  c /= p.joints();
  Vector out = p.coords();
  for (int k = 0; k < p.joints(); ++k) out.template segment<Dim>(Dim * k) = c + s * (p.joint(k) - c);
  return out;
}

}  // namespace

ClipBatch make_clip_batch(std::span<const Clip* const> clips, const NormStats& stats, std::span<const double> scales) {
  if (clips.empty()) throw std::invalid_argument("make_clip_batch: no clips");
  if (!scales.empty() && scales.size() != clips.size())
    throw std::invalid_argument("make_clip_batch: one scale per clip required");
  const std::size_t frames = clips.front()->size();
  if (frames == 0) throw std::invalid_argument("make_clip_batch: empty clip");
  const bool with3d = clips.front()->front().joints3d.has_value();
  const auto b = static_cast<Eigen::Index>(clips.size());
  const Eigen::Index d2 = clips.front()->front().joints2d.coords().size();

  ClipBatch batch;
  batch.p2d.assign(frames, Matrix(d2, b));
  if (with3d) batch.p3d.assign(frames, Matrix(d2 / 2 * 3, b));
  for (Eigen::Index c = 0; c < b; ++c) {
    const Clip& clip = *clips[static_cast<std::size_t>(c)];
    if (clip.size() != frames) throw std::invalid_argument("make_clip_batch: clips differ in length");
    const double s = scales.empty() ? 1.0 : scales[static_cast<std::size_t>(c)];
    for (std::size_t t = 0; t < frames; ++t) {
      const FrameRecord& f = clip[t];
      if (f.joints3d.has_value() != with3d)
        throw std::invalid_argument("mixed 3D-annotated and 2D-only frames in one batch (clip '" + f.seq_id + "')");
      batch.p2d[t].col(c) = normalize_columns(scaled_about_centroid(f.joints2d, s), stats.min2d, stats.max2d);
      if (with3d)
        batch.p3d[t].col(c) = normalize_columns(scaled_about_centroid(*f.joints3d, s), stats.min3d, stats.max3d);
    }
  }
  return batch;
}

MixedLoss mixed_batch_loss(Graph& g, const ClipBatch& batch, const ParamSet& params, const TrainConfig& cfg,
                           const Matrix* dropout_mask, BatchNormMode mode, ParamSet* sink) {
  if (batch.frames() == 0) throw std::invalid_argument("mixed_batch_loss: empty batch");
  std::vector<Var> frames;
  for (const Matrix& m : batch.p2d) frames.push_back(g.constant(m));
  std::vector<Var> lifted = lift_sequence(g, frames, params);
  Var all3d = g.hcat(lifted);
  Var all2d = g.hcat(frames);
  Var input = dropout_mask ? g.mask(all3d, *dropout_mask) : all3d;
  Var regressed = regress_3d(g, input, params, mode, sink);
  Var projected = project_2d(g, regressed, params, mode, sink);

  MixedLoss out;
  out.consistency = g.mse(all2d, projected);
  out.total = g.scale(out.consistency, cfg.lambda_proj);
  if (batch.has_3d()) {
    std::vector<Var> gts;
    for (const Matrix& m : batch.p3d) gts.push_back(g.constant(m));
    Var gt3d = g.hcat(gts);
    out.sequence3d = lifter_loss(g, lifted, gts);
    out.init = g.add(g.mse(regressed, gt3d), g.mse(projected, all2d));
    out.total = g.add(out.total, g.add(g.scale(out.sequence3d, cfg.lambda_3d), g.scale(out.init, cfg.lambda_init)));
  }
  return out;
}

double mixed_batch_loss(const ClipBatch& batch, const ParamSet& params, const TrainConfig& cfg) {
  Graph g;
  return g.value(mixed_batch_loss(g, batch, params, cfg).total)(0, 0);
}

Trainer::Trainer(const SequenceDataset& data3d, const SequenceDataset& data2d, TrainConfig cfg)
    : cfg_(std::move(cfg)), joints_(data3d.k), joint_names_(data3d.joint_names), rng_(cfg_.seed + 1) {
  cfg_.validate();
  data3d.validate();
  if (!data3d.fully_3d()) throw std::invalid_argument("train: every frame of the 3D dataset needs joints3d");
  const bool have2d = !data2d.sequences.empty();
  if (have2d) {
    data2d.validate();
    if (data2d.k != data3d.k) throw std::invalid_argument("train: 2D and 3D datasets disagree on k");
  }
  stats_ = compute_norm_stats(data3d);
  for (const auto& seq : data2d.sequences)
    for (const auto& f : seq.frames) {
      stats_.min2d = stats_.min2d.cwiseMin(f.joints2d.coords());
      stats_.max2d = stats_.max2d.cwiseMax(f.joints2d.coords());
    }
  for (const auto& seq : data3d.sequences)
    for (auto& c : make_clips(seq.frames, cfg_.clip_len)) clips3d_.push_back(std::move(c));
  for (const auto& seq : data2d.sequences)
    for (auto& c : make_clips(seq.frames, cfg_.clip_len)) {
      for (auto& f : c) f.joints3d.reset();
      clips2d_.push_back(std::move(c));
    }
  if (clips3d_.empty())
    throw std::invalid_argument("train: no 3D sequence has at least clip_len=" + std::to_string(cfg_.clip_len) +
                                " frames");
  ModelConfig mc = cfg_.model;
  mc.joints = joints_;
  params_ = init_model(mc, cfg_.seed);
  order3d_.resize(clips3d_.size());
  std::iota(order3d_.begin(), order3d_.end(), 0);
  order2d_.resize(clips2d_.size());
  std::iota(order2d_.begin(), order2d_.end(), 0);
  std::shuffle(order3d_.begin(), order3d_.end(), rng_);
  std::shuffle(order2d_.begin(), order2d_.end(), rng_);
}

std::vector<const Clip*> Trainer::draw(const std::vector<Clip>& clips, std::vector<std::size_t>& order,
                                       std::size_t& cursor) {
  std::vector<const Clip*> out;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), clips.size());
  while (out.size() < n) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng_);
      cursor = 0;
    }
    out.push_back(&clips[order[cursor++]]);
  }
  return out;
}

std::vector<double> Trainer::draw_scales(std::size_t n) {
  std::uniform_real_distribution<double> u(cfg_.scale_min, cfg_.scale_max);
  std::vector<double> s(n);
  for (auto& v : s) v = cfg_.scale_min == cfg_.scale_max ? cfg_.scale_min : u(rng_);
  return s;
}

Matrix Trainer::lift_values(const ClipBatch& batch) const {
  Graph g;
  std::vector<Var> frames;
  for (const Matrix& m : batch.p2d) frames.push_back(g.constant(m));
  return g.value(g.hcat(lift_sequence(g, frames, params_)));
}

void Trainer::check_finite(double loss, char stage, int step) const {
  if (!std::isfinite(loss))
    throw TrainingError(std::string("training diverged: stage ") + stage + " step " + std::to_string(step) +
                        " produced a non-finite loss");
}

void Trainer::stage_a(int steps) {
  AdamState adam(params_, params_.trainable_names(kLifterPrefixes), AdamHyper{cfg_.lr});
  for (int step = 0; step < steps; ++step) {
    auto clips = draw(clips3d_, order3d_, cursor3d_);
    auto scales = draw_scales(clips.size());
    ClipBatch batch = make_clip_batch(clips, stats_, scales);
    Graph g;
    std::vector<Var> frames, gts;
    for (const Matrix& m : batch.p2d) frames.push_back(g.constant(m));
    for (const Matrix& m : batch.p3d) gts.push_back(g.constant(m));
    Var loss = lifter_loss(g, lift_sequence(g, frames, params_), gts);
    const double value = g.value(loss)(0, 0);
    check_finite(value, 'A', step);
    adam_step(params_, g.backward(loss), adam);
    history_.stage_a.push_back(value);
    if (callback_) callback_('A', step, value);
  }
}

void Trainer::stage_b(int steps) {
  AdamState adam(params_, params_.trainable_names(kProjectorPrefixes), AdamHyper{cfg_.lr});
  for (int step = 0; step < steps; ++step) {
    auto clips = draw(clips3d_, order3d_, cursor3d_);
    auto scales = draw_scales(clips.size());
    ClipBatch batch = make_clip_batch(clips, stats_, scales);
    Matrix lifted = lift_values(batch);
    Matrix gt3d(lifted.rows(), lifted.cols()), gt2d(batch.p2d.front().rows(), lifted.cols());
    for (int t = 0; t < batch.frames(); ++t) {
      gt3d.middleCols(t * batch.size(), batch.size()) = batch.p3d[static_cast<std::size_t>(t)];
      gt2d.middleCols(t * batch.size(), batch.size()) = batch.p2d[static_cast<std::size_t>(t)];
    }
    Matrix mask = joint_dropout_mask(joints_, 3, lifted.cols(), cfg_.delta, rng_);
    Graph g;
    auto r = projector_init_loss(g, g.constant(lifted), g.constant(gt3d), g.constant(gt2d), params_, &mask,
                                 BatchNormMode::train, &params_);
    const double value = g.value(r.loss)(0, 0);
    check_finite(value, 'B', step);
    auto grads = g.backward(r.loss);
    adam_step(params_, grads, adam);
    history_.stage_b.push_back(value);
    if (callback_) callback_('B', step, value);
  }
}

void Trainer::stage_c(int steps) {
  AdamState adam(params_, params_.trainable_names(), AdamHyper{cfg_.lr});
  const int cycle = clips2d_.empty() ? 1 : 1 + cfg_.ratio_2d;
  for (int step = 0; step < steps; ++step) {
    const bool use2d = step % cycle != 0;
    auto clips = use2d ? draw(clips2d_, order2d_, cursor2d_) : draw(clips3d_, order3d_, cursor3d_);
    auto scales = draw_scales(clips.size());
    ClipBatch batch = make_clip_batch(clips, stats_, scales);
    Matrix mask = joint_dropout_mask(joints_, 3, batch.size() * batch.frames(), cfg_.delta, rng_);
    Graph g;
    MixedLoss loss = mixed_batch_loss(g, batch, params_, cfg_, &mask, BatchNormMode::train, &params_);
    const double value = g.value(loss.total)(0, 0);
    check_finite(value, 'C', step);
    adam_step(params_, g.backward(loss.total), adam);
    history_.stage_c.push_back(value);
    if (callback_) callback_('C', step, value);
  }
}

TrainResult Trainer::run() {
  stage_a(cfg_.steps_a);
  stage_b(cfg_.steps_b);
  stage_c(cfg_.steps_c);
  return {checkpoint(), history_};
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = infer_model_config(params_);
  c.clip_len = cfg_.clip_len;
  c.joint_names = joint_names_;
  c.stats = stats_;
  c.params = params_;
  return c;
}

double Trainer::projector_loss_all() const {
  std::vector<const Clip*> all;
  for (const auto& c : clips3d_) all.push_back(&c);
  ClipBatch batch = make_clip_batch(all, stats_);
  Matrix lifted = lift_values(batch);
  Matrix gt3d(lifted.rows(), lifted.cols()), gt2d(batch.p2d.front().rows(), lifted.cols());
  for (int t = 0; t < batch.frames(); ++t) {
    gt3d.middleCols(t * batch.size(), batch.size()) = batch.p3d[static_cast<std::size_t>(t)];
    gt2d.middleCols(t * batch.size(), batch.size()) = batch.p2d[static_cast<std::size_t>(t)];
  }
  Rng unused(0);
  return projector_init_loss(lifted, gt3d, gt2d, params_, 0.0, unused, BatchNormMode::eval);
}

double Trainer::lifter_loss_all() const {
  std::vector<const Clip*> all;
  for (const auto& c : clips3d_) all.push_back(&c);
  ClipBatch batch = make_clip_batch(all, stats_);
  Graph g;
  std::vector<Var> frames, gts;
  for (const Matrix& m : batch.p2d) frames.push_back(g.constant(m));
  for (const Matrix& m : batch.p3d) gts.push_back(g.constant(m));
  return g.value(lifter_loss(g, lift_sequence(g, frames, params_), gts))(0, 0);
}

TrainResult train(const SequenceDataset& data3d, const SequenceDataset& data2d, const TrainConfig& cfg) {
  Trainer t(data3d, data2d, cfg);
  return t.run();
}

}  // namespace poselift
