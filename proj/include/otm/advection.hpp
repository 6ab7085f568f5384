#pragma once

#include "otm/discretization.hpp"
#include "otm/domain.hpp"
#include "otm/types.hpp"

#include <string>

namespace otm {

/// Prescribed advection velocity field. Rigid rotations advance by the
/// closed-form rotation; named analytic fields advance by a classical
/// four-stage Runge-Kutta flow with Jacobian propagation when the field is
/// not divergence-free.
struct AdvectionField {
  enum class Kind { Zero, RigidRotation, Named };
  Kind kind = Kind::Zero;

  Vec3 axis_point{0.0, 0.0, 0.0};
  Vec3 axis{0.0, 0.0, 1.0}; // unit
  double omega = 0.0;       // angular velocity

  std::string name; // one of: radial_expansion, shear_xy
  Vec3 center{0.0, 0.0, 0.0};
  double rate = 0.0;

  static AdvectionField zero();
  static AdvectionField rigid_rotation(const Vec3& axis_point, const Vec3& axis,
                                       double omega);
  static AdvectionField named(const std::string& name, const Vec3& center, double rate);

  bool is_zero() const;
  bool divergence_free() const;
  Vec3 velocity(const Vec3& x) const;
  Mat3 velocity_gradient(const Vec3& x) const;
};

struct AdvectOutcome {
  int projected_nodes = 0;
};

/// Advective fractional step: maps every node and particle position through
/// the flow of the field over dt. Rigid and divergence-free fields leave
/// masses, volumes and densities untouched; general fields scale particle
/// volumes by the flow Jacobian determinant propagated alongside the
/// integration. Exterior nodes are repositioned on the boundary; a particle
/// leaving the domain is a fatal resolution error (spill over).
AdvectOutcome advect_step(const Domain& domain, NodeSet& nodes, MaterialPointSet& mps,
                          const AdvectionField& field, double dt);

} // namespace otm
