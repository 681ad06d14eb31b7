#include "poselift/projector.hpp"

namespace poselift {
namespace {

void require_rows(const char* op, const Graph& g, Var x, Eigen::Index rows) {
  if (g.value(x).rows() != rows)
    throw DimensionError(std::string(op) + ": input " + shape_str(g.value(x)) + ", expected " +
                         std::to_string(rows) + " rows");
}

}  // namespace

Var regress_3d(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode, ParamSet* sink) {
  require_rows("regress_3d", g, p3d, params["reg.fc_a.W"].cols());
  Var h = fc_forward(g, p3d, bind_fc(g, params, "reg.fc_a"));
  h = g.relu(batchnorm_layer(g, h, params, "reg.bn_a", mode, sink));
  return fc_forward(g, h, bind_fc(g, params, "reg.fc_b"));
}

Var project_2d_stem(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode, ParamSet* sink) {
  require_rows("project_2d", g, p3d, params["proj.fc1.W"].cols());
  Var h = fc_forward(g, p3d, bind_fc(g, params, "proj.fc1"));
  return g.relu(batchnorm_layer(g, h, params, "proj.bn1", mode, sink));
}

Var project_2d(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode, ParamSet* sink) {
  Var h1 = project_2d_stem(g, p3d, params, mode, sink);
  Var r = fc_forward(g, h1, bind_fc(g, params, "proj.fc2"));
  r = g.relu(batchnorm_layer(g, r, params, "proj.bn2", mode, sink));
  r = fc_forward(g, r, bind_fc(g, params, "proj.fc3"));
  return fc_forward(g, g.add(h1, r), bind_fc(g, params, "proj.fc4"));
}

ProjectorInitLoss projector_init_loss(Graph& g, Var p3d, Var gt3d, Var gt2d, const ParamSet& params,
                                      const Matrix* dropout_mask, BatchNormMode mode, ParamSet* sink) {
  if (g.value(p3d).cols() == 0) throw std::invalid_argument("projector_init_loss: empty batch");
  Var input = dropout_mask ? g.mask(p3d, *dropout_mask) : p3d;
  ProjectorInitLoss out;
  out.regressed = regress_3d(g, input, params, mode, sink);
  out.projected = project_2d(g, out.regressed, params, mode, sink);
  out.loss = g.add(g.mse(out.regressed, gt3d), g.mse(out.projected, gt2d));
  return out;
}

Pose3D regress_3d(const Pose3D& p3d, const ParamSet& params) {
  Graph g;
  return Pose3D(g.value(regress_3d(g, g.constant(p3d.coords()), params)).col(0));
}

Pose2D project_2d(const Pose3D& p3d, const ParamSet& params) {
  Graph g;
  return Pose2D(g.value(project_2d(g, g.constant(p3d.coords()), params)).col(0));
}

double projector_init_loss(const Matrix& p3d, const Matrix& gt3d, const Matrix& gt2d, const ParamSet& params,
                           double delta, Rng& rng, BatchNormMode mode) {
  Graph g;
  Matrix mask;
  if (delta > 0.0) mask = joint_dropout_mask(static_cast<int>(p3d.rows() / 3), 3, p3d.cols(), delta, rng);
  auto r = projector_init_loss(g, g.constant(p3d), g.constant(gt3d), g.constant(gt2d), params,
                               delta > 0.0 ? &mask : nullptr, mode);
  return g.value(r.loss)(0, 0);
}

}  // namespace poselift
