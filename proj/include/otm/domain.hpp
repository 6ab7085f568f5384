#pragma once

#include "otm/types.hpp"

namespace otm {

enum class DomainKind { Sphere, Cylinder, Annulus, HalfSpace };

/// Closed-form signed-distance description of the container (or of an
/// initial-condition region). All kinds are exact primitives: the annulus
/// with square cross section reduces to a rectangle in the (radius, axial)
/// half-plane, so its distance and projection are closed-form as well.
struct Domain {
  DomainKind kind = DomainKind::Sphere;
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 axis{0.0, 0.0, 1.0}; // cylinder/annulus axis; half-space outward normal
  double radius = 0.0;      // sphere and cylinder
  double half_length = 0.0; // cylinder axial half-extent
  double inner_radius = 0.0, outer_radius = 0.0, half_height = 0.0; // annulus

  static Domain sphere(const Vec3& center, double radius);
  static Domain cylinder(const Vec3& center, const Vec3& axis, double radius,
                         double half_length);
  static Domain annulus(const Vec3& center, const Vec3& axis, double inner_radius,
                        double outer_radius, double half_height);
  static Domain half_space(const Vec3& point, const Vec3& outward_normal);

  /// Throws Error(Config) when size parameters are not strictly positive,
  /// the annulus radii are not ordered, or an axis is not normalizable.
  void validate() const;

  /// Length scale used for tolerance scaling; half-space has no finite
  /// diameter and reports 0.
  double diameter() const;
};

/// Negative inside, zero on the boundary, positive outside.
double signed_distance(const Domain& domain, const Vec3& p);

/// Nearest boundary point of an exterior point. Throws Error(Argument) when
/// signed_distance(p) <= 0: only exterior nodes are ever projected.
Vec3 project_to_boundary(const Domain& domain, const Vec3& p);

/// Minimum radius of curvature the nodal set must resolve, as seen from the
/// interior: sphere and cylinder report their own radius, the annulus its
/// inner radius, the half-space +infinity.
double feature_radius(const Domain& domain);

/// Closed-domain convention: boundary points are contained.
bool contains(const Domain& domain, const Vec3& p);

} // namespace otm
