#include "otm/domain.hpp"
#include "otm/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace otm;

namespace {

std::mt19937 rng(20240811);

Vec3 random_point(double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return Vec3(u(rng), u(rng), u(rng));
}

Domain tilted_cylinder() {
  return Domain::cylinder(Vec3(0.2, -0.1, 0.3), Vec3(1, 1, 1), 0.5, 0.125);
}

Domain paper_annulus() {
  return Domain::annulus(Vec3::Zero(), Vec3(0, 0, 1), 0.25, 0.5, 0.125);
}

} // namespace

TEST_CASE("signed distance of primitives") {
  Domain s = Domain::sphere(Vec3::Zero(), 7.0);
  CHECK(signed_distance(s, Vec3(0, 0, 0)) == doctest::Approx(-7.0));
  CHECK(signed_distance(s, Vec3(7, 0, 0)) == doctest::Approx(0.0));
  CHECK(signed_distance(s, Vec3(8, 0, 0)) == doctest::Approx(1.0));

  // Annulus inner wall at mid-height: radial distance to the hole boundary.
  Domain a = paper_annulus();
  CHECK(signed_distance(a, Vec3(0.25, 0, 0)) == doctest::Approx(0.0).epsilon(1e-14));
  // Hand evaluation of the section-rectangle composite for an interior point:
  // r = 0.4, z = 0.05 -> min(0.4-0.25, 0.5-0.4, 0.125-0.05) = 0.075.
  CHECK(signed_distance(a, Vec3(0.4, 0, 0.05)) == doctest::Approx(-0.075));
  // Exterior in the hole beyond the cap: hypot(0.25-0.1, 0.2-0.125).
  CHECK(signed_distance(a, Vec3(0.1, 0, 0.2)) ==
        doctest::Approx(std::hypot(0.15, 0.075)));

  Domain c = tilted_cylinder();
  CHECK(signed_distance(c, c.center) == doctest::Approx(-0.125)); // cap is nearest
  Domain h = Domain::half_space(Vec3(0, 0, 1), Vec3(0, 0, 1));
  CHECK(signed_distance(h, Vec3(5, 5, 0)) == doctest::Approx(-1.0));
  CHECK(signed_distance(h, Vec3(0, 0, 3)) == doctest::Approx(2.0));
}

TEST_CASE("boundary projection of exterior points") {
  Domain s = Domain::sphere(Vec3::Zero(), 7.0);
  CHECK((project_to_boundary(s, Vec3(8, 0, 0)) - Vec3(7, 0, 0)).norm() < 1e-14);
  CHECK((project_to_boundary(s, Vec3(0, 0, 7.5)) - Vec3(0, 0, 7)).norm() < 1e-14);

  // Annulus: same angle and height, radius clamped to the outer wall.
  Domain a = paper_annulus();
  double ang = 0.37;
  Vec3 p(0.7 * std::cos(ang), 0.7 * std::sin(ang), 0.05);
  Vec3 q = project_to_boundary(a, p);
  CHECK((q - Vec3(0.5 * std::cos(ang), 0.5 * std::sin(ang), 0.05)).norm() < 1e-14);

  CHECK_THROWS_AS(project_to_boundary(s, Vec3(1, 0, 0)), Error); // interior: caller bug
}

TEST_CASE("feature radius per kind") {
  CHECK(feature_radius(paper_annulus()) == doctest::Approx(0.25));
  CHECK(feature_radius(Domain::sphere(Vec3::Zero(), 7.0)) == doctest::Approx(7.0));
  CHECK(feature_radius(Domain::cylinder(Vec3::Zero(), Vec3(0, 0, 1), 0.5, 0.125)) ==
        doctest::Approx(0.5));
  CHECK(std::isinf(feature_radius(Domain::half_space(Vec3::Zero(), Vec3(0, 0, 1)))));
}

TEST_CASE("containment follows the closed-domain sign convention") {
  Domain s = Domain::sphere(Vec3::Zero(), 7.0);
  CHECK(contains(s, Vec3(0, 0, 0)));
  CHECK_FALSE(contains(s, Vec3(8, 0, 0)));
  CHECK(contains(s, Vec3(7, 0, 0))); // boundary point
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Domain::sphere(Vec3::Zero(), 0.0), Error);
  CHECK_THROWS_AS(Domain::sphere(Vec3::Zero(), -1.0), Error);
  CHECK_THROWS_AS(Domain::annulus(Vec3::Zero(), Vec3(0, 0, 1), 0.5, 0.25, 0.1), Error);
  CHECK_THROWS_AS(Domain::cylinder(Vec3::Zero(), Vec3(0, 0, 0), 1.0, 1.0), Error);
}

TEST_CASE("projection lands on the boundary for random exterior points") {
  const Domain domains[] = {Domain::sphere(Vec3(0.1, -0.2, 0.3), 7.0),
                            tilted_cylinder(), paper_annulus()};
  for (const Domain& d : domains) {
    const double extent = 1.5 * std::max(d.diameter(), 1.0);
    int tested = 0;
    while (tested < 10000) {
      Vec3 p = d.center + random_point(extent);
      if (!(signed_distance(d, p) > 0.0)) continue;
      ++tested;
      Vec3 q = project_to_boundary(d, p);
      CHECK(std::abs(signed_distance(d, q)) <= 1e-10 * d.diameter());
      // Nearest-point optimality cross-check on a random boundary sample.
      Vec3 other = project_to_boundary(
          d, d.center + random_point(extent).normalized() * d.diameter());
      CHECK((p - q).norm() <= (p - other).norm() + 1e-9 * d.diameter());
    }
  }
}

TEST_CASE("projection idempotence") {
  const Domain domains[] = {Domain::sphere(Vec3::Zero(), 7.0), tilted_cylinder(),
                            paper_annulus()};
  for (const Domain& d : domains) {
    int tested = 0;
    while (tested < 2000) {
      Vec3 p = d.center + random_point(d.diameter());
      if (!(signed_distance(d, p) > 1e-6)) continue;
      ++tested;
      Vec3 q = project_to_boundary(d, p);
      Vec3 outward = (p - q).norm() > 0 ? Vec3((p - q).normalized()) : Vec3(1, 0, 0);
      Vec3 q2 = project_to_boundary(d, q + 1e-12 * outward);
      CHECK((q2 - q).norm() <= 1e-9);
    }
  }
}

TEST_CASE("contains is equivalent to nonpositive signed distance") {
  const Domain domains[] = {Domain::sphere(Vec3::Zero(), 7.0), tilted_cylinder(),
                            paper_annulus()};
  for (const Domain& d : domains)
    for (int i = 0; i < 100000 / 3; ++i) {
      Vec3 p = d.center + random_point(d.diameter());
      CHECK(contains(d, p) == (signed_distance(d, p) <= 0.0));
    }
}

TEST_CASE("signed distance is 1-Lipschitz on sampled pairs") {
  const Domain domains[] = {Domain::sphere(Vec3::Zero(), 7.0), tilted_cylinder(),
                            paper_annulus()};
  for (const Domain& d : domains)
    for (int i = 0; i < 20000; ++i) {
      Vec3 p = d.center + random_point(d.diameter());
      Vec3 q = d.center + random_point(d.diameter());
      CHECK(std::abs(signed_distance(d, p) - signed_distance(d, q)) <=
            (p - q).norm() + 1e-12);
    }
}
