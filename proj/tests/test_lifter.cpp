#include "helpers.hpp"

#include "poselift/gradcheck.hpp"
#include "poselift/lifter.hpp"

#include <doctest.h>

using namespace poselift;
using testing::rand_matrix;
using testing::random_model;

namespace {

constexpr int K = 4;

std::vector<Pose2D> random_frames(int n, Rng& rng) {
  std::vector<Pose2D> out;
  for (int i = 0; i < n; ++i) out.emplace_back(Vector(rand_matrix(2 * K, 1, rng, 0.0, 1.0)));
  return out;
}

// Independent composition of the lifter layers on one column.
struct Oracle {
  const ParamSet& p;

  static Vector sig(const Vector& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

  Vector encode(const Vector& x) const { return (p["enc.W"] * x + p["enc.b"]).cwiseMax(0.0); }

  void cell(int layer, const Vector& x, Vector& h, Vector& c) const {
    const std::string l = "lstm" + std::to_string(layer) + ".";
    auto pre = [&](const char* g) {
      const std::string s(g);
      return Vector(p[l + "W_" + s] * x + p[l + "U_" + s] * h + p[l + "b_" + s]);
    };
    const Vector i = sig(pre("i")), f = sig(pre("f")), o = sig(pre("o"));
    const Vector gc = pre("g").array().tanh().matrix();
    c = f.cwiseProduct(c) + i.cwiseProduct(gc);
    h = o.cwiseProduct(Vector(c.array().tanh().matrix()));
  }

  std::vector<Vector> unroll(const std::vector<Pose2D>& frames) const {
    const auto H = p["enc.b"].rows();
    Vector h0 = Vector::Zero(H), c0 = Vector::Zero(H), h1 = Vector::Zero(H), c1 = Vector::Zero(H);
    std::vector<Vector> out;
    for (const auto& f : frames) {
      cell(0, encode(f.coords()), h0, c0);
      cell(1, h0, h1, c1);
      out.push_back(p["out.W"] * h1 + p["out.b"]);
    }
    return out;
  }
};

}  // namespace

TEST_SUITE("encode_2d") {
  TEST_CASE("zero weights give a zero feature") {
    const ParamSet p = testing::zero_like(random_model(1, K));
    Rng rng(1);
    CHECK(encode_2d(random_frames(1, rng)[0], p).isZero(0.0));
  }

  TEST_CASE("deterministic for a fixed seed") {
    Rng rng(2);
    const Pose2D x = random_frames(1, rng)[0];
    CHECK(encode_2d(x, random_model(5, K)) == encode_2d(x, random_model(5, K)));
  }

  TEST_CASE("equals FC followed by ReLU") {
    Rng rng(3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ParamSet p = random_model(seed, K);
      const Pose2D x = random_frames(1, rng)[0];
      CHECK((encode_2d(x, p) - Oracle{p}.encode(x.coords())).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  TEST_CASE("rejects inputs outside the normalized guard band") {
    const ParamSet p = random_model(1, K);
    Pose2D x = Pose2D::zeros(K);
    x.coords()(3) = 250.0;
    CHECK_THROWS_AS(encode_2d(x, p), ValidationError);
    x.coords()(3) = -0.6;
    CHECK_THROWS_AS(encode_2d(x, p), ValidationError);
    x.coords()(3) = 1.49;
    CHECK_NOTHROW(encode_2d(x, p));
  }

  TEST_CASE("feature width follows the model") {
    const ParamSet p = init_model({K, 1024, 2, 16}, 0);
    CHECK(encode_2d(Pose2D::zeros(K), p).size() == 1024);
  }
}

TEST_SUITE("lift_step") {
  TEST_CASE("zero parameters give zero pose and zero state") {
    const ParamSet p = testing::zero_like(random_model(3, K));
    Graph g;
    auto s0 = zero_state(g, p, 1);
    auto r = lift_step(g, g.constant(Matrix::Constant(6, 1, 0.7)), s0, p);
    CHECK(g.value(r.pose3d).isZero(0.0));
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(g.value(r.state.h[l]).isZero(0.0));
      CHECK(g.value(r.state.c[l]).isZero(0.0));
    }
  }

  TEST_CASE("carried state changes the output for a repeated frame") {
    const ParamSet p = random_model(4, K);
    Rng rng(4);
    const Pose2D x = random_frames(1, rng)[0];
    Graph g;
    auto f = encode_2d(g, g.constant(x.coords()), p);
    auto first = lift_step(g, f, zero_state(g, p, 1), p);
    auto carried = lift_step(g, f, first.state, p);
    auto reset = lift_step(g, f, zero_state(g, p, 1), p);
    CHECK(g.value(carried.pose3d) != g.value(reset.pose3d));
    CHECK(g.value(reset.pose3d) == g.value(first.pose3d));
  }

  TEST_CASE("equals two LSTM cells and the output layer") {
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ParamSet p = random_model(seed, K);
      const Pose2D x = random_frames(1, rng)[0];
      Graph g;
      auto r = lift_step(g, encode_2d(g, g.constant(x.coords()), p), zero_state(g, p, 1), p);
      const Vector expect = Oracle{p}.unroll({x})[0];
      CHECK((g.value(r.pose3d).col(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("state of the wrong depth is rejected") {
    const ParamSet p = random_model(1, K);
    Graph g;
    LifterState s = zero_state(g, p, 1);
    s.h.pop_back();
    CHECK_THROWS_AS(lift_step(g, g.constant(Matrix::Zero(6, 1)), s, p), DimensionError);
  }
}

TEST_SUITE("lift_sequence") {
  TEST_CASE("single frame equals one step from zero state") {
    const ParamSet p = random_model(6, K);
    Rng rng(6);
    const auto frames = random_frames(1, rng);
    const auto out = lift_sequence(frames, p);
    Graph g;
    auto r = lift_step(g, encode_2d(g, g.constant(frames[0].coords()), p), zero_state(g, p, 1), p);
    CHECK(out[0].coords() == Vector(g.value(r.pose3d).col(0)));
  }

  TEST_CASE("zero parameters give zero outputs") {
    const ParamSet p = testing::zero_like(random_model(6, K));
    Rng rng(7);
    for (const auto& pose : lift_sequence(random_frames(5, rng), p)) CHECK(pose.coords().isZero(0.0));
  }

  TEST_CASE("three frames equal a manual unrolling") {
    Rng rng(8);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ParamSet p = random_model(seed, K);
      const auto frames = random_frames(3, rng);
      const auto out = lift_sequence(frames, p);
      const auto expect = Oracle{p}.unroll(frames);
      for (int t = 0; t < 3; ++t) CHECK((out[t].coords() - expect[t]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("empty sequence is rejected") {
    const ParamSet p = random_model(1, K);
    CHECK_THROWS_AS(lift_sequence(std::span<const Pose2D>{}, p), std::invalid_argument);
  }

  TEST_CASE("output at t depends only on frames up to t") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const ParamSet p = random_model(seed + 100, K);
      auto frames = random_frames(6, rng);
      const auto full = lift_sequence(frames, p);
      for (std::size_t t = 1; t <= frames.size(); ++t) {
        const auto prefix = lift_sequence(std::span<const Pose2D>(frames.data(), t), p);
        CHECK(prefix.back() == full[t - 1]);
      }
      auto changed = frames;
      changed[4] = random_frames(1, rng)[0];
      const auto other = lift_sequence(changed, p);
      for (int t = 0; t < 4; ++t) CHECK(other[t] == full[t]);
    }
  }

  TEST_CASE("first output is a function of the first frame only") {
    const ParamSet p = random_model(9, K);
    Rng rng(9);
    auto a = random_frames(4, rng);
    auto b = random_frames(4, rng);
    b[0] = a[0];
    CHECK(lift_sequence(a, p)[0] == lift_sequence(b, p)[0]);
  }

  TEST_CASE("parameter count does not depend on sequence length") {
    const ParamSet p = random_model(1, K);
    Rng rng(1);
    Graph g3, g7;
    auto bind = [&](Graph& g, int n) {
      std::vector<Var> f;
      for (const auto& x : random_frames(n, rng)) f.push_back(g.constant(x.coords()));
      auto out = lift_sequence(g, f, p);
      Var total = g.sum(out[0]);
      for (std::size_t i = 1; i < out.size(); ++i) total = g.add(total, g.sum(out[i]));
      return g.backward(total).size();
    };
    CHECK(bind(g3, 3) == bind(g7, 7));
    CHECK(bind(g3, 3) == p.subset(kLifterPrefixes).trainable_names().size());
  }
}

TEST_SUITE("lifter_loss") {
  TEST_CASE("equal sequences give zero") {
    Rng rng(1);
    std::vector<Pose3D> a{Pose3D(Vector(rand_matrix(12, 1, rng))), Pose3D(Vector(rand_matrix(12, 1, rng)))};
    CHECK(lifter_loss(a, a) == 0.0);
  }

  TEST_CASE("one coordinate off by one gives one") {
    std::vector<Pose3D> a{Pose3D::zeros(K), Pose3D::zeros(K)};
    auto b = a;
    b[1].coords()(0) = 1.0;
    CHECK(lifter_loss(a, b) == 1.0);
  }

  TEST_CASE("equals per-frame squared error summed over frames") {
    Rng rng(2);
    std::vector<Pose3D> a, b;
    for (int t = 0; t < 5; ++t) {
      a.emplace_back(Vector(rand_matrix(12, 1, rng)));
      b.emplace_back(Vector(rand_matrix(12, 1, rng)));
    }
    double expect = 0.0;
    for (int t = 0; t < 5; ++t)
      for (int i = 0; i < 12; ++i) expect += std::pow(a[t].coords()(i) - b[t].coords()(i), 2);
    CHECK(std::abs(lifter_loss(a, b) - expect) < 1e-12);
  }

  TEST_CASE("length mismatch is rejected") {
    std::vector<Pose3D> a{Pose3D::zeros(K)}, b{Pose3D::zeros(K), Pose3D::zeros(K)};
    CHECK_THROWS_AS(lifter_loss(a, b), std::invalid_argument);
  }

  TEST_CASE("gradients through time match central differences") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Rng rng(seed);
      const ParamSet p = random_model(seed, 3, 5).subset(kLifterPrefixes);
      std::vector<Matrix> x, y;
      for (int t = 0; t < 4; ++t) {
        x.push_back(rand_matrix(6, 2, rng, 0.0, 1.0));
        y.push_back(rand_matrix(9, 2, rng, 0.0, 1.0));
      }
      LossBuilder build = [&](Graph& g, const ParamSet& ps) {
        std::vector<Var> f, gt;
        for (const auto& m : x) f.push_back(g.constant(m));
        for (const auto& m : y) gt.push_back(g.constant(m));
        return lifter_loss(g, lift_sequence(g, f, ps), gt);
      };
      Graph probe;
      build(probe, p);
      if (relu_margin(probe) < 1e-3) continue;
      const auto r = check_gradients("lifter", build, p);
      CHECK_MESSAGE(r.passed, "seed ", seed, ": ", r.worst_entry, " rel ", r.max_rel_error);
    }
  }
}
