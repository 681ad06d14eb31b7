#include "helpers.hpp"

#include "poselift/normalize.hpp"
#include "poselift/projector.hpp"
#include "poselift/ssc.hpp"

#include <doctest.h>

#include <limits>

using namespace poselift;
using testing::rand_matrix;
using testing::random_model;

namespace {

constexpr int K = 5;

NormStats mm_stats() {
  return {Vector::Zero(2 * K), Vector::Constant(2 * K, 1000.0), Vector::Zero(3 * K), Vector::Constant(3 * K, 1000.0)};
}

RefineConfig config(double step, int iters = 2) {
  RefineConfig c;
  c.step_size = step;
  c.max_iters = iters;
  c.robust_joints = {0, 1, 2, 3, 4};
  return c;
}

struct Frame {
  Pose2D p2d;
  Pose3D p3d;
};

Frame random_frame(const ParamSet& p, Rng& rng, double noise) {
  Pose3D p3d(Vector(rand_matrix(3 * K, 1, rng, 0.0, 1.0)));
  Pose2D p2d = project_2d(regress_3d(p3d, p), p);
  p2d.coords() += noise * Vector(rand_matrix(2 * K, 1, rng));
  return {p2d, p3d};
}

}  // namespace

TEST_SUITE("robust_joint_change") {
  TEST_CASE("identical poses give zero") {
    Rng rng(1);
    const Pose3D a(Vector(rand_matrix(3 * K, 1, rng)));
    const std::vector<int> joints{0, 2, 4};
    CHECK(robust_joint_change(a, a, joints) == 0.0);
  }

  TEST_CASE("one of five joints moved by (3, 4, 0) averages to one") {
    const Pose3D a = Pose3D::zeros(K);
    Pose3D b = a;
    b.joint(2) = Eigen::Vector3d(3.0, 4.0, 0.0);
    const std::vector<int> joints{0, 1, 2, 3, 4};
    CHECK(robust_joint_change(a, b, joints) == 1.0);
  }

  TEST_CASE("matches a loop over the joint set") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const Pose3D a(Vector(rand_matrix(3 * K, 1, rng))), b(Vector(rand_matrix(3 * K, 1, rng)));
      const std::vector<int> joints{1, 3, 4};
      double sum = 0.0;
      for (int k : joints) {
        double sq = 0.0;
        for (int d = 0; d < 3; ++d) sq += std::pow(a.coords()(3 * k + d) - b.coords()(3 * k + d), 2);
        sum += std::sqrt(sq);
      }
      CHECK(robust_joint_change(a, b, joints) == doctest::Approx(sum / 3.0).epsilon(1e-12));
    }
  }

  TEST_CASE("empty joint set is rejected") {
    CHECK_THROWS_AS(robust_joint_change(Pose3D::zeros(K), Pose3D::zeros(K), std::span<const int>{}),
                    std::invalid_argument);
  }
}

TEST_SUITE("refine_frame") {
  TEST_CASE("consistent input is a fixed point") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const ParamSet p = random_model(seed, K);
      Rng rng(seed);
      const Frame f = random_frame(p, rng, 0.0);
      const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), config(1e-2));
      CHECK(r.pose == regress_3d(f.p3d, p));
      CHECK(r.report.verdict == Verdict::converged_early);
      CHECK(r.report.losses.front() == 0.0);
    }
  }

  TEST_CASE("small steps never increase the projection loss") {
    for (auto opt : {RefineOptimizer::adam, RefineOptimizer::sgd}) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const ParamSet p = random_model(seed + 1000, K);
        Rng rng(seed);
        const Frame f = random_frame(p, rng, 0.2);
        RefineConfig c = config(1e-6);
        c.optimizer = opt;
        const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), c);
        REQUIRE(r.report.losses.size() >= 2);
        for (std::size_t i = 1; i < r.report.losses.size(); ++i)
          CHECK(r.report.losses[i] <= r.report.losses[i - 1]);
        CHECK(r.report.losses.back() <= r.report.losses.front());
      }
    }
  }

  TEST_CASE("forced tau violation returns the unrefined output and leaves weights alone") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const ParamSet p = random_model(seed + 2000, K);
      const auto checksum = p.checksum();
      Rng rng(seed);
      const Frame f = random_frame(p, rng, 0.3);
      const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), config(1e3));
      CHECK(r.report.verdict == Verdict::discarded);
      CHECK(r.pose == regress_3d(f.p3d, p));
      CHECK(p.checksum() == checksum);
    }
  }

  TEST_CASE("discarded output does not depend on step size or iterations") {
    const ParamSet p = random_model(7, K);
    Rng rng(7);
    const Frame f = random_frame(p, rng, 0.3);
    const RefineResult a = refine_frame(f.p2d, f.p3d, p, mm_stats(), config(1e3, 2));
    const RefineResult b = refine_frame(f.p2d, f.p3d, p, mm_stats(), config(5e4, 5));
    REQUIRE(a.report.verdict == Verdict::discarded);
    REQUIRE(b.report.verdict == Verdict::discarded);
    CHECK(a.pose == b.pose);
  }

  TEST_CASE("shared weights are unchanged after refinement") {
    const ParamSet p = random_model(8, K);
    const ParamSet before = p;
    Rng rng(8);
    const Frame f = random_frame(p, rng, 0.1);
    refine_frame(f.p2d, f.p3d, p, mm_stats(), config(1e-3));
    CHECK(p == before);
  }

  TEST_CASE("report lengths follow the iteration count") {
    for (int iters : {1, 2, 4}) {
      const ParamSet p = random_model(9, K);
      Rng rng(9);
      const Frame f = random_frame(p, rng, 0.2);
      RefineConfig c = config(1e-4, iters);
      c.eps_mm = 1e-9;
      const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), c);
      CHECK(r.report.losses.size() <= static_cast<std::size_t>(iters + 1));
      CHECK(r.report.robust_change_mm.size() + 1 == r.report.losses.size());
      if (r.report.verdict == Verdict::refined) CHECK(r.report.losses.size() == static_cast<std::size_t>(iters + 1));
    }
  }

  TEST_CASE("refined pose is the regression under the updated clone") {
    const ParamSet p = random_model(10, K);
    Rng rng(10);
    const Frame f = random_frame(p, rng, 0.2);
    RefineConfig c = config(1e-4, 1);
    c.eps_mm = 1e-12;
    c.tau_mm = 1e6;
    c.optimizer = RefineOptimizer::sgd;
    const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), c);
    REQUIRE(r.report.verdict == Verdict::refined);
    Graph g;
    Var q = regress_3d(g, g.constant(f.p3d.coords()), p);
    auto grads = g.backward(g.mse(g.constant(f.p2d.coords()), project_2d(g, q, p)));
    ParamSet stepped = p;
    for (const auto& [name, grad] : grads) stepped.at(name) -= 1e-4 * grad;
    CHECK(r.pose == regress_3d(f.p3d, stepped));
    CHECK(grads.count("proj.fc4.W") == 1);
    CHECK(grads.count("reg.fc_a.W") == 1);
  }

  TEST_CASE("non-finite loss is discarded") {
    const ParamSet p = random_model(11, K);
    Rng rng(11);
    Frame f = random_frame(p, rng, 0.0);
    f.p2d.coords()(0) = std::numeric_limits<double>::infinity();
    const RefineResult r = refine_frame(f.p2d, f.p3d, p, mm_stats(), config(1e-2));
    CHECK(r.report.verdict == Verdict::discarded);
    CHECK(r.pose == regress_3d(f.p3d, p));
  }

  TEST_CASE("invalid configurations are rejected") {
    const ParamSet p = random_model(12, K);
    const Frame f{Pose2D::zeros(K), Pose3D::zeros(K)};
    RefineConfig c = config(1e-2);
    c.eps_mm = 30.0;
    CHECK_THROWS_AS(refine_frame(f.p2d, f.p3d, p, mm_stats(), c), std::invalid_argument);
    c = config(1e-2, 0);
    CHECK_THROWS_AS(refine_frame(f.p2d, f.p3d, p, mm_stats(), c), std::invalid_argument);
    c = config(1e-2);
    c.robust_joints = {K};
    CHECK_THROWS_AS(refine_frame(f.p2d, f.p3d, p, mm_stats(), c), std::invalid_argument);
    c.robust_joints = {};
    CHECK_THROWS_AS(refine_frame(f.p2d, f.p3d, p, mm_stats(), c), std::invalid_argument);
  }

  TEST_CASE("defaults are two iterations and thresholds 5 and 20 mm") {
    const RefineConfig c;
    CHECK(c.max_iters == 2);
    CHECK(c.eps_mm == 5.0);
    CHECK(c.tau_mm == 20.0);
    CHECK(c.step_size == 1e-2);
  }
}
