#pragma once

#include "poselift/model.hpp"
#include "poselift/nn/layers.hpp"

#include <random>

namespace testing {

using namespace poselift;

inline Matrix rand_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

// Small model with every trainable tensor (biases included) perturbed away
// from its initial value and random positive running statistics.
inline ParamSet random_model(std::uint64_t seed, int joints = 4, int hidden = 6, int width = 7) {
  Rng rng(seed);
  ParamSet p = init_model({joints, hidden, 2, width}, seed);
  for (const auto& [name, e] : p.entries()) {
    Matrix& m = p.at(name);
    if (e.trainable)
      m += rand_matrix(m.rows(), m.cols(), rng, -0.3, 0.3);
    else if (name.ends_with(".var"))
      m = rand_matrix(m.rows(), m.cols(), rng, 0.5, 2.0);
    else
      m = rand_matrix(m.rows(), m.cols(), rng, -0.5, 0.5);
  }
  return p;
}

inline ParamSet zero_like(const ParamSet& p) {
  ParamSet z = p;
  for (const auto& [name, e] : p.entries())
    if (e.trainable) z.at(name).setZero();
  return z;
}

}  // namespace testing
