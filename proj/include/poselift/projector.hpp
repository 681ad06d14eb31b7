#pragma once

#include "poselift/nn/graph.hpp"
#include "poselift/nn/layers.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Regression network: FC_b(ReLU(BN(FC_a(p3d)))), 3K -> 3K.
// In train mode with a sink, updated running statistics land in sink.
Var regress_3d(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode = BatchNormMode::eval,
               ParamSet* sink = nullptr);

// Projection network, 3K -> 2K:
//   h1 = ReLU(BN1(FC1(x)))
//   h2 = h1 + FC3(ReLU(BN2(FC2(h1))))
//   out = FC4(h2)
Var project_2d(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode = BatchNormMode::eval,
               ParamSet* sink = nullptr);

// Hidden activation h1 of the projection network (exposed for the skip test).
Var project_2d_stem(Graph& g, Var p3d, const ParamSet& params, BatchNormMode mode = BatchNormMode::eval,
                    ParamSet* sink = nullptr);

struct ProjectorInitLoss {
  Var loss;
  Var regressed;  // Psi_C output, 3K x batch
  Var projected;  // Psi_P output, 2K x batch
};

// sum_t ||Psi_C(drop(p3d_t)) - gt3d_t||^2 + ||Psi_P(Psi_C(drop(p3d_t))) - gt2d_t||^2.
// Columns of dropout_mask (3K x batch, 0/1) select surviving joints; pass
// nullptr for no dropout.
ProjectorInitLoss projector_init_loss(Graph& g, Var p3d, Var gt3d, Var gt2d, const ParamSet& params,
                                      const Matrix* dropout_mask, BatchNormMode mode, ParamSet* sink = nullptr);

// Value-level wrappers (eval-mode batch norm).
Pose3D regress_3d(const Pose3D& p3d, const ParamSet& params);
Pose2D project_2d(const Pose3D& p3d, const ParamSet& params);

// Batch loss on column-stacked poses. delta > 0 draws a joint dropout mask from rng.
double projector_init_loss(const Matrix& p3d, const Matrix& gt3d, const Matrix& gt2d, const ParamSet& params,
                           double delta, Rng& rng, BatchNormMode mode = BatchNormMode::eval);

}  // namespace poselift
