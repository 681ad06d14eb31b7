#include "poselift/inference.hpp"

#include "poselift/data/skeleton.hpp"
#include "poselift/lifter.hpp"
#include "poselift/normalize.hpp"
#include "poselift/projector.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

namespace poselift {

using nlohmann::json;

int thread_cap() {
  if (const char* env = std::getenv("POSELIFT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<FramePrediction> infer_sequence(const Checkpoint& ckpt, const Sequence& seq, const InferOptions& opts) {
  RefineConfig refine = opts.refine;
  if (refine.robust_joints.empty()) refine.robust_joints = resolve_robust_joints(ckpt.joint_names);
  const int window = opts.single_frame ? 1 : std::max(1, ckpt.clip_len);
  const Sequence* targets = nullptr;
  if (opts.ssc && opts.ssc_targets) {
    for (const auto& s : opts.ssc_targets->sequences)
      if (s.id == seq.id) targets = &s;
    if (!targets || targets->frames.size() != seq.frames.size())
      throw std::invalid_argument("infer: refinement targets do not cover sequence '" + seq.id + "'");
  }

  std::vector<FramePrediction> out;
  out.reserve(seq.frames.size());
  for (std::size_t start = 0; start < seq.frames.size(); start += static_cast<std::size_t>(window)) {
    const std::size_t end = std::min(seq.frames.size(), start + static_cast<std::size_t>(window));
    std::vector<Pose2D> inputs;
    for (std::size_t i = start; i < end; ++i) inputs.push_back(normalize_pose(seq.frames[i].joints2d, ckpt.stats));
    const std::vector<Pose3D> lifted = lift_sequence(inputs, ckpt.params);
    for (std::size_t i = start; i < end; ++i) {
      const Pose2D& p2d = inputs[i - start];
      const Pose3D& p3d = lifted[i - start];
      FramePrediction pred{seq.id, seq.frames[i].t, {}, std::nullopt};
      if (opts.ssc) {
        Pose2D target = p2d;
        if (targets) {
          const FrameRecord& tf = targets->frames[i];
          if (tf.t != seq.frames[i].t)
            throw std::invalid_argument("infer: refinement target frame mismatch in '" + seq.id + "'");
          target = normalize_pose(tf.joints2d, ckpt.stats);
        }
        RefineResult r = refine_frame(target, p3d, ckpt.params, ckpt.stats, refine);
        pred.pose_mm = denormalize_pose(r.pose, ckpt.stats);
        pred.report = std::move(r.report);
      } else {
        pred.pose_mm = denormalize_pose(regress_3d(p3d, ckpt.params), ckpt.stats);
      }
      out.push_back(std::move(pred));
    }
  }
  return out;
}

std::vector<FramePrediction> infer_dataset(const Checkpoint& ckpt, const SequenceDataset& data,
                                           const InferOptions& opts) {
  if (data.k != ckpt.model.joints)
    throw std::invalid_argument("infer: dataset has k=" + std::to_string(data.k) + ", model expects " +
                                std::to_string(ckpt.model.joints));
  const std::size_t n = data.sequences.size();
  std::vector<std::vector<FramePrediction>> per_seq(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        per_seq[i] = infer_sequence(ckpt, data.sequences[i], opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(opts.threads > 0 ? opts.threads : thread_cap(), static_cast<int>(n));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<FramePrediction> out;
  for (auto& v : per_seq)
    for (auto& p : v) out.push_back(std::move(p));
  return out;
}

namespace {

json pose_json(const Pose3D& p) {
  json a = json::array();
  for (int k = 0; k < p.joints(); ++k) a.push_back({p.joint(k).x(), p.joint(k).y(), p.joint(k).z()});
  return a;
}

}  // namespace

void write_predictions(std::ostream& out, const std::vector<FramePrediction>& preds) {
  for (const auto& p : preds) {
    json j;
    j["seq_id"] = p.seq_id;
    j["t"] = p.t;
    j["pose3d_mm"] = pose_json(p.pose_mm);
    if (p.report) {
      const RefineReport& r = *p.report;
      j["ssc"] = {{"verdict", to_string(r.verdict)},
                  {"loss_before", r.losses.front()},
                  {"loss_after", r.losses.back()},
                  {"robust_change_mm", r.robust_change_mm.empty() ? 0.0 : r.robust_change_mm.back()}};
    } else {
      j["ssc"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

void write_predictions_csv(std::ostream& out, const std::vector<FramePrediction>& preds) {
  out << "seq_id,t,joint,x,y,z\n" << std::setprecision(17);
  for (const auto& p : preds)
    for (int k = 0; k < p.pose_mm.joints(); ++k)
      out << p.seq_id << ',' << p.t << ',' << k << ',' << p.pose_mm.joint(k).x() << ',' << p.pose_mm.joint(k).y()
          << ',' << p.pose_mm.joint(k).z() << '\n';
}

std::vector<FramePrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<FramePrediction> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      FramePrediction p;
      p.seq_id = j.at("seq_id").get<std::string>();
      p.t = j.at("t").get<long>();
      const json& pose = j.at("pose3d_mm");
      Vector v(3 * static_cast<Eigen::Index>(pose.size()));
      for (std::size_t k = 0; k < pose.size(); ++k) {
        if (pose[k].size() != 3) throw FormatError("joint " + std::to_string(k) + " needs 3 coordinates");
        for (std::size_t d = 0; d < 3; ++d) v(static_cast<Eigen::Index>(3 * k + d)) = pose[k][d].get<double>();
      }
      p.pose_mm = Pose3D(std::move(v));
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

EvalReport evaluate(const std::vector<FramePrediction>& preds, const SequenceDataset& gt, Alignment align) {
  std::map<std::string, const Sequence*> by_id;
  for (const auto& s : gt.sequences) by_id[s.id] = &s;
  std::vector<int> root;
  if (align == Alignment::root) root = resolve_root_joints(gt.joint_names);

  std::map<std::string, std::pair<std::vector<Pose3D>, std::vector<Pose3D>>> grouped;
  for (const auto& p : preds) {
    auto it = by_id.find(p.seq_id);
    if (it == by_id.end()) throw std::invalid_argument("eval: unknown sequence '" + p.seq_id + "'");
    const auto& frames = it->second->frames;
    auto f = std::lower_bound(frames.begin(), frames.end(), p.t,
                              [](const FrameRecord& r, long t) { return r.t < t; });
    if (f == frames.end() || f->t != p.t)
      throw std::invalid_argument("eval: no frame t=" + std::to_string(p.t) + " in '" + p.seq_id + "'");
    if (!f->joints3d) throw std::invalid_argument("eval: frame t=" + std::to_string(p.t) + " of '" + p.seq_id +
                                                  "' has no 3D ground truth");
    grouped[p.seq_id].first.push_back(p.pose_mm);
    grouped[p.seq_id].second.push_back(*f->joints3d);
  }
  if (grouped.empty()) throw std::invalid_argument("eval: no predictions");
  EvalReport report;
  double weighted = 0.0;
  for (const auto& [id, pair] : grouped) {
    const double e = mpjpe(pair.first, pair.second, align, root);
    report.per_sequence[id] = e;
    weighted += e * static_cast<double>(pair.first.size());
    report.frames += pair.first.size();
  }
  report.overall = weighted / static_cast<double>(report.frames);
  return report;
}

}  // namespace poselift
