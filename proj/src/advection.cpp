#include "otm/advection.hpp"

#include "otm/error.hpp"

#include <cmath>
#include <sstream>

namespace otm {

AdvectionField AdvectionField::zero() { return {}; }

AdvectionField AdvectionField::rigid_rotation(const Vec3& axis_point, const Vec3& axis,
                                              double omega) {
  double n = axis.norm();
  if (!(n > 0.0))
    throw Error(ErrorCode::Config, "rigid rotation axis must be a nonzero vector");
  AdvectionField f;
  f.kind = Kind::RigidRotation;
  f.axis_point = axis_point;
  f.axis = axis / n;
  f.omega = omega;
  return f;
}

AdvectionField AdvectionField::named(const std::string& name, const Vec3& center,
                                     double rate) {
  if (name != "radial_expansion" && name != "shear_xy")
    throw Error(ErrorCode::Config, "unknown advection field name '" + name + "'");
  AdvectionField f;
  f.kind = Kind::Named;
  f.name = name;
  f.center = center;
  f.rate = rate;
  return f;
}

bool AdvectionField::is_zero() const {
  switch (kind) {
    case Kind::Zero: return true;
    case Kind::RigidRotation: return omega == 0.0;
    case Kind::Named: return rate == 0.0;
  }
  return true;
}

bool AdvectionField::divergence_free() const {
  switch (kind) {
    case Kind::Zero:
    case Kind::RigidRotation: return true;
    case Kind::Named: return name == "shear_xy";
  }
  return true;
}

Vec3 AdvectionField::velocity(const Vec3& x) const {
  switch (kind) {
    case Kind::Zero:
      return Vec3::Zero();
    case Kind::RigidRotation:
      return omega * axis.cross(x - axis_point);
    case Kind::Named:
      if (name == "radial_expansion") return rate * (x - center);
      return Vec3(rate * (x.y() - center.y()), 0.0, 0.0); // shear_xy
  }
  return Vec3::Zero();
}

Mat3 AdvectionField::velocity_gradient(const Vec3&) const {
  switch (kind) {
    case Kind::Zero:
      return Mat3::Zero();
    case Kind::RigidRotation: {
      Mat3 w;
      w << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
      return omega * w;
    }
    case Kind::Named: {
      if (name == "radial_expansion") return rate * Mat3::Identity();
      Mat3 g = Mat3::Zero();
      g(0, 1) = rate;
      return g;
    }
  }
  return Mat3::Zero();
}

namespace {

Mat3 rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// One RK4 stage set for the joint system (x, F): dx/dt = u(x),
// dF/dt = grad u(x) F. Returns det(F) at the end of the step.
double rk4_flow(const AdvectionField& field, Vec3& x, double dt, bool track_jacobian) {
  Mat3 F = Mat3::Identity();
  Vec3 k1 = field.velocity(x);
  Vec3 k2 = field.velocity(x + 0.5 * dt * k1);
  Vec3 k3 = field.velocity(x + 0.5 * dt * k2);
  Vec3 k4 = field.velocity(x + dt * k3);
  if (track_jacobian) {
    Mat3 K1 = field.velocity_gradient(x) * F;
    Mat3 K2 = field.velocity_gradient(x + 0.5 * dt * k1) * (F + 0.5 * dt * K1);
    Mat3 K3 = field.velocity_gradient(x + 0.5 * dt * k2) * (F + 0.5 * dt * K2);
    Mat3 K4 = field.velocity_gradient(x + dt * k3) * (F + dt * K3);
    F += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
  }
  x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return F.determinant();
}

} // namespace

AdvectOutcome advect_step(const Domain& domain, NodeSet& nodes, MaterialPointSet& mps,
                          const AdvectionField& field, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Argument, "advect_step requires dt > 0");
  AdvectOutcome out;
  if (field.is_zero()) return out;

  const double spill_tol = 1e-12 * std::max(domain.diameter(), 1.0);

  if (field.kind == AdvectionField::Kind::RigidRotation) {
    const Mat3 R = rotation_about(field.axis, field.omega * dt);
    for (Vec3& x : nodes.x) x = field.axis_point + R * (x - field.axis_point);
    for (Vec3& x : mps.x) x = field.axis_point + R * (x - field.axis_point);
  } else {
    const bool scale_volumes = !field.divergence_free();
    for (Vec3& x : nodes.x) rk4_flow(field, x, dt, false);
    for (std::size_t p = 0; p < mps.size(); ++p) {
      double det = rk4_flow(field, mps.x[p], dt, scale_volumes);
      if (scale_volumes) {
        if (!(det > 0.0)) {
          std::ostringstream os;
          os << "advective flow inverted particle " << p << " (det = " << det << ")";
          throw Error(ErrorCode::Inversion, os.str());
        }
        mps.volume[p] *= det;
        mps.density[p] = mps.mass[p] / mps.volume[p];
      }
    }
  }

  for (Vec3& x : nodes.x)
    if (signed_distance(domain, x) > 0.0) {
      x = project_to_boundary(domain, x);
      ++out.projected_nodes;
    }
  for (std::size_t p = 0; p < mps.size(); ++p)
    if (signed_distance(domain, mps.x[p]) > spill_tol) {
      std::ostringstream os;
      os << "particle " << p << " left the domain during advection (spill over): "
         << "under-resolved discretization";
      throw Error(ErrorCode::Resolution, os.str());
    }
  return out;
}

} // namespace otm
