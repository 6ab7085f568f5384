#include "otm/maxent.hpp"

#include "otm/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace otm;

namespace {

std::mt19937 rng(90210);

Vec3 random_in_cube(double half) {
  std::uniform_real_distribution<double> u(-half, half);
  return Vec3(u(rng), u(rng), u(rng));
}

// Random neighborhood with the evaluation point strictly inside the hull:
// a strictly positive convex combination of the nodes.
struct Cloud {
  std::vector<Vec3> nodes;
  Vec3 x;
  double beta;
  double h;
};

Cloud random_cloud(int n_min = 6, int n_max = 30) {
  std::uniform_int_distribution<int> nn(n_min, n_max);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Cloud c;
  int n = nn(rng);
  for (int i = 0; i < n; ++i) c.nodes.push_back(random_in_cube(1.0));
  double wsum = 0.0;
  c.x = Vec3::Zero();
  for (const Vec3& v : c.nodes) {
    double w = u(rng);
    c.x += w * v;
    wsum += w;
  }
  c.x /= wsum;
  std::vector<double> d;
  for (const Vec3& v : c.nodes) d.push_back((v - c.x).norm());
  std::sort(d.begin(), d.end());
  c.h = (d[0] + d[1] + d[2] + d[3]) / 4.0;
  c.beta = 1.8 / (c.h * c.h);
  return c;
}

// The dual objective log Z(lambda) whose minimizer defines the shape
// functions; used by the derivative-free oracle below.
double log_partition(const Cloud& c, const Vec3& lambda) {
  double emax = -std::numeric_limits<double>::infinity();
  std::vector<double> e(c.nodes.size());
  for (std::size_t a = 0; a < c.nodes.size(); ++a) {
    Vec3 z = c.nodes[a] - c.x;
    e[a] = -c.beta * z.squaredNorm() - lambda.dot(z);
    emax = std::max(emax, e[a]);
  }
  double s = 0.0;
  for (double v : e) s += std::exp(v - emax);
  return emax + std::log(s);
}

// Independent oracle: coarse lambda grid followed by cyclic golden-section
// refinement of the (smooth, convex) dual objective. Never uses the Newton
// machinery under test.
Vec3 oracle_lambda(const Cloud& c) {
  const double L = 8.0 / c.h;
  Vec3 best = Vec3::Zero();
  double fbest = log_partition(c, best);
  const int grid = 9;
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; j <= grid; ++j)
      for (int k = 0; k <= grid; ++k) {
        Vec3 lam(-L + 2 * L * i / grid, -L + 2 * L * j / grid, -L + 2 * L * k / grid);
        double f = log_partition(c, lam);
        if (f < fbest) {
          fbest = f;
          best = lam;
        }
      }
  // Polish by damped Newton on the objective with finite-difference
  // derivatives; only evaluations of log Z are used.
  const double s = 3e-6 / c.h;
  double fcur = fbest;
  for (int iter = 0; iter < 200; ++iter) {
    Vec3 g;
    Mat3 H;
    for (int i = 0; i < 3; ++i) {
      Vec3 lp = best, lm = best;
      lp[i] += s;
      lm[i] -= s;
      double fp = log_partition(c, lp), fm = log_partition(c, lm);
      g[i] = (fp - fm) / (2.0 * s);
      H(i, i) = (fp - 2.0 * fcur + fm) / (s * s);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        Vec3 lpp = best, lpm = best, lmp = best, lmm = best;
        lpp[i] += s; lpp[j] += s;
        lpm[i] += s; lpm[j] -= s;
        lmp[i] -= s; lmp[j] += s;
        lmm[i] -= s; lmm[j] -= s;
        H(i, j) = H(j, i) = (log_partition(c, lpp) - log_partition(c, lpm) -
                             log_partition(c, lmp) + log_partition(c, lmm)) /
                            (4.0 * s * s);
      }
    Vec3 step = H.ldlt().solve(-g);
    if (!step.allFinite()) break;
    double scale = 1.0;
    Vec3 next = best;
    double fnext = fcur;
    for (int halving = 0; halving < 30; ++halving) {
      Vec3 trial = best + scale * step;
      double ftrial = log_partition(c, trial);
      if (ftrial <= fcur) {
        next = trial;
        fnext = ftrial;
        break;
      }
      scale *= 0.5;
    }
    double moved = (next - best).norm();
    best = next;
    fcur = fnext;
    if (moved <= 1e-12 / c.h) break;
  }
  return best;
}

std::vector<double> oracle_values(const Cloud& c, const Vec3& lambda) {
  std::vector<double> e(c.nodes.size());
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < c.nodes.size(); ++a) {
    Vec3 z = c.nodes[a] - c.x;
    e[a] = -c.beta * z.squaredNorm() - lambda.dot(z);
    emax = std::max(emax, e[a]);
  }
  double Z = 0.0;
  for (double& v : e) {
    v = std::exp(v - emax);
    Z += v;
  }
  for (double& v : e) v /= Z;
  return e;
}

} // namespace

TEST_CASE("two-node pair via the 1-D restriction") {
  using Vec1 = Eigen::Matrix<double, 1, 1>;
  std::vector<Vec1> nodes = {Vec1(0.0), Vec1(1.0)};
  LmeParams params;
  auto res = lme_solve<1>(std::span<const Vec1>(nodes), Vec1(0.5), 1.8, params);
  CHECK(res.values[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(res.values[1] == doctest::Approx(0.5).epsilon(1e-14));
  // Linear interpolation gradients on [0,1].
  CHECK(res.gradients[0](0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(res.gradients[1](0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("regular tetrahedron at the barycenter") {
  std::vector<Vec3> nodes = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1),
                             Vec3(-1, -1, 1)};
  LmeParams params;
  auto res = evaluate_point(nodes, Vec3::Zero(), 1.8 / 3.0, params);
  Vec3 grad_sum = Vec3::Zero();
  for (int a = 0; a < 4; ++a) {
    CHECK(res.values[a] == doctest::Approx(0.25).epsilon(1e-13));
    grad_sum += res.gradients[a];
  }
  CHECK(grad_sum.norm() < 1e-12);
}

TEST_CASE("values match the dual-objective search oracle") {
  for (int trial = 0; trial < 25; ++trial) {
    Cloud c = random_cloud(5, 5);
    LmeParams params;
    auto res = evaluate_point(c.nodes, c.x, c.beta, params);
    auto ref = oracle_values(c, oracle_lambda(c));
    for (std::size_t a = 0; a < c.nodes.size(); ++a)
      CHECK(std::abs(res.values[a] - ref[a]) <= 1e-8);
  }
}

TEST_CASE("consistency identities hold on randomized neighborhoods") {
  LmeParams params;
  for (int trial = 0; trial < 300; ++trial) {
    Cloud c = random_cloud();
    auto res = evaluate_point(c.nodes, c.x, c.beta, params);
    double pou = 0.0;
    Vec3 first = Vec3::Zero(), gsum = Vec3::Zero();
    Mat3 gfirst = Mat3::Zero();
    for (std::size_t a = 0; a < c.nodes.size(); ++a) {
      CHECK(res.values[a] >= 0.0);
      CHECK(res.values[a] <= 1.0);
      pou += res.values[a];
      first += res.values[a] * c.nodes[a];
      gsum += res.gradients[a];
      gfirst += c.nodes[a] * res.gradients[a].transpose();
    }
    CHECK(std::abs(pou - 1.0) <= 1e-12);
    CHECK((first - c.x).norm() <= 1e-10 * c.h);
    CHECK(gsum.norm() <= 1e-8 / c.h);
    CHECK((gfirst - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("gradients match central finite differences") {
  LmeParams params;
  for (int trial = 0; trial < 50; ++trial) {
    Cloud c = random_cloud(8, 25);
    auto res = evaluate_point(c.nodes, c.x, c.beta, params);
    double delta = 1e-6 * c.h;
    double gmax = 0.0;
    for (const Vec3& g : res.gradients) gmax = std::max(gmax, g.norm());
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 xp = c.x, xm = c.x;
      xp[axis] += delta;
      xm[axis] -= delta;
      auto rp = evaluate_point(c.nodes, xp, c.beta, params);
      auto rm = evaluate_point(c.nodes, xm, c.beta, params);
      for (std::size_t a = 0; a < c.nodes.size(); ++a) {
        double fd = (rp.values[a] - rm.values[a]) / (2.0 * delta);
        CHECK(std::abs(res.gradients[a][axis] - fd) <= 1e-5 * gmax);
      }
    }
  }
}

TEST_CASE("affine maps are reproduced") {
  LmeParams params;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Cloud c = random_cloud();
    auto res = evaluate_point(c.nodes, c.x, c.beta, params);
    Mat3 A;
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = u(rng);
    Vec3 b(u(rng), u(rng), u(rng));
    Vec3 mapped = b;
    for (std::size_t a = 0; a < c.nodes.size(); ++a)
      mapped += res.values[a] * (A * c.nodes[a]);
    CHECK((mapped - (A * c.x + b)).norm() <= 1e-9 * A.norm() * c.h + 1e-13);
  }
}

TEST_CASE("Newton converges quadratically near the root") {
  LmeParams params;
  params.newton_tol = 1e-13;
  int observed = 0;
  for (int trial = 0; trial < 40 && observed < 10; ++trial) {
    Cloud c = random_cloud(10, 20);
    auto res = evaluate_point(c.nodes, c.x, c.beta, params);
    const auto& hist = res.residual_history;
    for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
      double rk = hist[k] / c.h, rk1 = hist[k + 1] / c.h;
      if (rk < 1e-3 && rk > 1e-12) {
        CHECK(rk1 <= 100.0 * rk * rk);
        ++observed;
      }
    }
  }
  CHECK(observed >= 10);
}

TEST_CASE("solver failure modes") {
  LmeParams params;
  SUBCASE("point outside the neighbor hull") {
    std::vector<Vec3> nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                               Vec3(0, 0, 1)};
    CHECK_THROWS_AS(evaluate_point(nodes, Vec3(2, 2, 2), 1.8, params), Error);
  }
  SUBCASE("coplanar neighbors give a singular moment matrix") {
    std::vector<Vec3> nodes = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
                               Vec3(0, -1, 0)};
    CHECK_THROWS_AS(evaluate_point(nodes, Vec3(0.1, 0.1, 0), 1.8, params), Error);
  }
  SUBCASE("too few neighbors") {
    std::vector<Vec3> nodes = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    CHECK_THROWS_AS(evaluate_point(nodes, Vec3::Zero(), 1.8, params), Error);
  }
}

TEST_CASE("shape table on the single-tetrahedron seed") {
  SeedResult s = seed_from_tets({Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1),
                                 Vec3(-1, -1, 1)},
                                {{0, 1, 2, 3}}, 1.0);
  LmeParams params;
  NeighborTable table = build_neighbors(s.nodes, s.mps, params);
  ShapeTable shape = build_shape_table(s.nodes, s.mps, table, params);
  REQUIRE(shape.particle_count == 1);
  auto N = shape.shape_values(0);
  REQUIRE(N.size() == 4);
  for (double v : N) CHECK(v == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("support truncation drops sub-cut entries and keeps the identities") {
  // A marginal far node picks up a shape value below the (maximal legal)
  // cut and must be pruned from the table.
  LmeParams params;
  params.eps_cut = 1e-3;
  double far = 0.94 * std::sqrt(std::log(1.0 / params.eps_cut) / params.gamma);
  std::vector<Vec3> v = {Vec3(1, 0, 0),  Vec3(-1, 0, 0), Vec3(0, 1, 0),
                         Vec3(0, -1, 0), Vec3(0, 0, 1),  Vec3(0, 0, -1),
                         Vec3(far, 0, 0)};
  NodeSet nodes{v, {}, {}};
  MaterialPointSet mps;
  mps.x = {Vec3(0.05, 0.02, -0.01)};
  mps.mass = {1.0};
  mps.volume = {1.0};
  mps.density = {1.0};
  NeighborTable table = build_neighbors(nodes, mps, params);
  REQUIRE(table.neighbors(0).size() == 7);

  auto untruncated = evaluate_point(v, mps.x[0], params.gamma, params);
  REQUIRE(untruncated.values[6] < params.eps_cut);
  REQUIRE(untruncated.values[6] > 0.0);

  ShapeTable shape = build_shape_table(nodes, mps, table, params);
  auto list = shape.neighbors(0);
  CHECK(list.size() == 6);
  CHECK(std::find(list.begin(), list.end(), 6u) == list.end());
  double pou = 0.0;
  for (double n : shape.shape_values(0)) {
    CHECK(n >= params.eps_cut);
    pou += n;
  }
  CHECK(std::abs(pou - 1.0) <= 1e-12);
}

TEST_CASE("shape tables are bitwise deterministic") {
  Domain container = Domain::sphere(Vec3::Zero(), 7.0);
  Domain region = Domain::sphere(Vec3::Zero(), 1.0);
  SeedResult s = seed(container, region, 0.3, 1.0);
  LmeParams params;
  NeighborTable table = build_neighbors(s.nodes, s.mps, params);
  ShapeTable a = build_shape_table(s.nodes, s.mps, table, params);
  ShapeTable b = build_shape_table(s.nodes, s.mps, table, params);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
  for (std::size_t i = 0; i < a.gradients.size(); ++i)
    CHECK(a.gradients[i] == b.gradients[i]);
}

TEST_CASE("per-particle failures carry the particle index") {
  // Particle outside its neighbor hull: push it past the hull after the
  // table is built.
  SeedResult s = seed_from_tets({Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1),
                                 Vec3(-1, -1, 1)},
                                {{0, 1, 2, 3}}, 1.0);
  LmeParams params;
  NeighborTable table = build_neighbors(s.nodes, s.mps, params);
  s.mps.x[0] = Vec3(5, 5, 5);
  try {
    build_shape_table(s.nodes, s.mps, table, params);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Resolution);
    CHECK(std::string(e.what()).find("particle 0") != std::string::npos);
  }
}
