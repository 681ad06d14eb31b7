#include "poselift/ssc.hpp"

#include "poselift/model.hpp"
#include "poselift/nn/adam.hpp"
#include "poselift/projector.hpp"

#include <cmath>

namespace poselift {

void RefineConfig::validate(int joints) const {
  if (max_iters < 1) throw std::invalid_argument("refine: max_iters must be at least 1");
  if (!(eps_mm < tau_mm)) throw std::invalid_argument("refine: eps must be below tau");
  if (!(step_size > 0.0)) throw std::invalid_argument("refine: step size must be positive");
  if (robust_joints.empty()) throw std::invalid_argument("refine: no robust joints");
  for (int j : robust_joints)
    if (j < 0 || j >= joints) throw std::invalid_argument("refine: robust joint " + std::to_string(j) + " out of range");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::refined: return "refined";
    case Verdict::converged_early: return "converged_early";
    case Verdict::discarded: return "discarded";
  }
  return "unknown";
}

double robust_joint_change(const Pose3D& before, const Pose3D& after, std::span<const int> joints) {
  if (joints.empty()) throw std::invalid_argument("robust_joint_change: empty joint set");
  if (before.joints() != after.joints()) throw DimensionError("robust_joint_change: joint counts differ");
  double sum = 0.0;
  for (int k : joints) {
    if (k < 0 || k >= before.joints()) throw std::invalid_argument("robust_joint_change: joint out of range");
    sum += (after.joint(k) - before.joint(k)).norm();
  }
  return sum / static_cast<double>(joints.size());
}

namespace {

struct Evaluation {
  double loss;
  Vector regressed;
  std::map<std::string, Matrix> grads;
};

Evaluation evaluate(const Pose2D& p2d, const Pose3D& p3d, const ParamSet& clone, bool with_grads) {
  Graph g;
  Var q = regress_3d(g, g.constant(p3d.coords()), clone);
  Var proj = project_2d(g, q, clone);
  Var loss = g.mse(g.constant(p2d.coords()), proj);
  Evaluation e{g.value(loss)(0, 0), g.value(q).col(0), {}};
  if (with_grads) e.grads = g.backward(loss);
  return e;
}

void sgd_step(ParamSet& params, const std::map<std::string, Matrix>& grads, double step) {
  for (const auto& [name, grad] : grads) params.at(name) -= step * grad;
}

}  // namespace

double projection_loss(const Pose2D& p2d, const Pose3D& p3d, const ParamSet& params) {
  return evaluate(p2d, p3d, params, false).loss;
}

RefineResult refine_frame(const Pose2D& p2d, const Pose3D& p3d, const ParamSet& params, const NormStats& stats,
                          const RefineConfig& cfg) {
  cfg.validate(p3d.joints());
  ParamSet clone = params.subset(kProjectorPrefixes);
  AdamState adam(clone, clone.trainable_names(), AdamHyper{cfg.step_size});

  RefineResult out;
  RefineReport& report = out.report;
  Evaluation cur = evaluate(p2d, p3d, clone, cfg.max_iters > 0);
  const Vector original = cur.regressed;
  report.losses.push_back(cur.loss);
  auto discard = [&] {
    report.verdict = Verdict::discarded;
    out.pose = Pose3D(original);
    return out;
  };
  if (!std::isfinite(cur.loss)) return discard();

  Pose3D prev_mm = denormalize_pose(Pose3D(cur.regressed), stats);
  report.verdict = Verdict::refined;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (cfg.optimizer == RefineOptimizer::adam)
      adam_step(clone, cur.grads, adam);
    else
      sgd_step(clone, cur.grads, cfg.step_size);
    cur = evaluate(p2d, p3d, clone, it < cfg.max_iters);
    report.losses.push_back(cur.loss);
    if (!std::isfinite(cur.loss) || !cur.regressed.allFinite()) return discard();
    Pose3D now_mm = denormalize_pose(Pose3D(cur.regressed), stats);
    const double change = robust_joint_change(prev_mm, now_mm, cfg.robust_joints);
    report.robust_change_mm.push_back(change);
    if (!(change <= cfg.tau_mm)) return discard();
    if (change < cfg.eps_mm) {
      report.verdict = Verdict::converged_early;
      break;
    }
    prev_mm = std::move(now_mm);
  }
  out.pose = Pose3D(cur.regressed);
  return out;
}

}  // namespace poselift
