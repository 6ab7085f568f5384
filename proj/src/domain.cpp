#include "otm/domain.hpp"

#include "otm/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace otm {

namespace {

Vec3 normalized_axis(const Vec3& a) {
  double n = a.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::Config, "domain axis must be a nonzero finite vector");
  return a / n;
}

// Cylindrical decomposition of p about the domain axis: axial coordinate z,
// radial coordinate r and radial unit direction er (unset when r ~ 0).
struct CylCoords {
  double r, z;
  Vec3 er;
  bool er_valid;
};

CylCoords cyl_coords(const Domain& d, const Vec3& p) {
  Vec3 rel = p - d.center;
  double z = rel.dot(d.axis);
  Vec3 radial = rel - z * d.axis;
  double r = radial.norm();
  CylCoords c{r, z, Vec3::Zero(), false};
  if (r > 0.0) {
    c.er = radial / r;
    c.er_valid = true;
  }
  return c;
}

// Any unit vector perpendicular to the axis; deterministic fallback for
// on-axis projections where the angular coordinate is arbitrary.
Vec3 perpendicular_of(const Vec3& axis) {
  Vec3 trial = std::abs(axis.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  Vec3 perp = trial - trial.dot(axis) * axis;
  return perp.normalized();
}

// Exact SDF of the section rectangle in the (r,z) half-plane. has_hole
// distinguishes the annulus (inner wall at r0) from the solid cylinder,
// where r = 0 is the symmetry axis, not a boundary.
double section_sdf(double r, double z, double r0, double r1, double h, bool has_hole) {
  double dr = has_hole ? std::max(r0 - r, r - r1) : r - r1;
  double dz = std::abs(z) - h;
  if (dr <= 0.0 && dz <= 0.0) return std::max(dr, dz);
  return std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
}

} // namespace

Domain Domain::sphere(const Vec3& center, double radius) {
  Domain d;
  d.kind = DomainKind::Sphere;
  d.center = center;
  d.radius = radius;
  d.validate();
  return d;
}

Domain Domain::cylinder(const Vec3& center, const Vec3& axis, double radius,
                        double half_length) {
  Domain d;
  d.kind = DomainKind::Cylinder;
  d.center = center;
  d.axis = normalized_axis(axis);
  d.radius = radius;
  d.half_length = half_length;
  d.validate();
  return d;
}

Domain Domain::annulus(const Vec3& center, const Vec3& axis, double inner_radius,
                       double outer_radius, double half_height) {
  Domain d;
  d.kind = DomainKind::Annulus;
  d.center = center;
  d.axis = normalized_axis(axis);
  d.inner_radius = inner_radius;
  d.outer_radius = outer_radius;
  d.half_height = half_height;
  d.validate();
  return d;
}

Domain Domain::half_space(const Vec3& point, const Vec3& outward_normal) {
  Domain d;
  d.kind = DomainKind::HalfSpace;
  d.center = point;
  d.axis = normalized_axis(outward_normal);
  d.validate();
  return d;
}

void Domain::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "domain parameter '" << name << "' must be strictly positive, got " << v;
      throw Error(ErrorCode::Config, os.str());
    }
  };
  if (!center.allFinite())
    throw Error(ErrorCode::Config, "domain center must be finite");
  switch (kind) {
    case DomainKind::Sphere:
      positive(radius, "radius");
      break;
    case DomainKind::Cylinder:
      positive(radius, "radius");
      positive(half_length, "half_length");
      break;
    case DomainKind::Annulus:
      positive(inner_radius, "inner_radius");
      positive(outer_radius, "outer_radius");
      positive(half_height, "half_height");
      if (!(outer_radius > inner_radius))
        throw Error(ErrorCode::Config, "annulus requires outer_radius > inner_radius");
      break;
    case DomainKind::HalfSpace:
      break;
  }
  if (kind != DomainKind::Sphere && std::abs(axis.norm() - 1.0) > 1e-12)
    throw Error(ErrorCode::Config, "domain axis must be unit length");
}

double Domain::diameter() const {
  switch (kind) {
    case DomainKind::Sphere:   return 2.0 * radius;
    case DomainKind::Cylinder: return 2.0 * std::hypot(radius, half_length);
    case DomainKind::Annulus:  return 2.0 * std::hypot(outer_radius, half_height);
    case DomainKind::HalfSpace: return 0.0;
  }
  return 0.0;
}

double signed_distance(const Domain& d, const Vec3& p) {
  switch (d.kind) {
    case DomainKind::Sphere:
      return (p - d.center).norm() - d.radius;
    case DomainKind::Cylinder: {
      CylCoords c = cyl_coords(d, p);
      return section_sdf(c.r, c.z, 0.0, d.radius, d.half_length, false);
    }
    case DomainKind::Annulus: {
      CylCoords c = cyl_coords(d, p);
      return section_sdf(c.r, c.z, d.inner_radius, d.outer_radius, d.half_height, true);
    }
    case DomainKind::HalfSpace:
      return (p - d.center).dot(d.axis);
  }
  return 0.0;
}

Vec3 project_to_boundary(const Domain& d, const Vec3& p) {
  if (!(signed_distance(d, p) > 0.0))
    throw Error(ErrorCode::Argument,
                "project_to_boundary requires an exterior point (signed_distance > 0)");
  switch (d.kind) {
    case DomainKind::Sphere: {
      Vec3 rel = p - d.center;
      return d.center + d.radius * (rel / rel.norm());
    }
    case DomainKind::Cylinder:
    case DomainKind::Annulus: {
      const double r0 = d.kind == DomainKind::Annulus ? d.inner_radius : 0.0;
      const double r1 = d.kind == DomainKind::Annulus ? d.outer_radius : d.radius;
      const double h = d.kind == DomainKind::Annulus ? d.half_height : d.half_length;
      CylCoords c = cyl_coords(d, p);
      // Nearest point of a solid of revolution preserves the angular
      // coordinate, so project (r,z) onto the section rectangle.
      double rq = std::clamp(c.r, r0, r1);
      double zq = std::clamp(c.z, -h, h);
      if (rq == c.r && zq == c.z) {
        // Exterior input guarantees at least one coordinate clamps except
        // for roundoff at the boundary itself; snap to the closest wall.
        // The cylinder has no inner wall (r = 0 is the symmetry axis).
        const bool has_hole = d.kind == DomainKind::Annulus;
        double to_inner = has_hole ? c.r - r0 : std::numeric_limits<double>::infinity();
        double to_outer = r1 - c.r, to_cap = h - std::abs(c.z);
        if (to_cap <= std::min(to_inner, to_outer))
          zq = c.z < 0.0 ? -h : h;
        else if (to_inner <= to_outer)
          rq = r0;
        else
          rq = r1;
      }
      Vec3 er = c.er_valid ? c.er : perpendicular_of(d.axis);
      return d.center + zq * d.axis + rq * er;
    }
    case DomainKind::HalfSpace:
      return p - signed_distance(d, p) * d.axis;
  }
  return p;
}

double feature_radius(const Domain& d) {
  switch (d.kind) {
    case DomainKind::Sphere:   return d.radius;
    case DomainKind::Cylinder: return d.radius;
    case DomainKind::Annulus:  return d.inner_radius;
    case DomainKind::HalfSpace: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

bool contains(const Domain& d, const Vec3& p) {
  return signed_distance(d, p) <= 0.0;
}

} // namespace otm
