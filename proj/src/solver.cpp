#include "otm/solver.hpp"

#include "otm/error.hpp"
#include "otm/transport_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace otm {

double stable_dt(const NodeSet& nodes, const NeighborTable& table, double kappa,
                 double safety) {
  if (!(kappa >= 0.0)) throw Error(ErrorCode::Argument, "stable_dt requires kappa >= 0");
  if (!(safety > 0.0 && safety < 1.0))
    throw Error(ErrorCode::Argument, "stable_dt requires safety in (0, 1)");
  if (kappa == 0.0) return std::numeric_limits<double>::infinity();
  double dx = min_shared_node_spacing(nodes, table);
  return safety * dx * dx / kappa;
}

std::vector<double> assemble_lumped_mass(const ShapeTable& shape,
                                         const MaterialPointSet& mps) {
  std::vector<double> lumped(shape.node_count, 0.0);
  for (std::size_t p = 0; p < shape.particle_count; ++p) {
    auto list = shape.neighbors(p);
    auto N = shape.shape_values(p);
    for (std::size_t k = 0; k < list.size(); ++k)
      lumped[list[k]] += mps.mass[p] * N[k];
  }
  return lumped;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(rows(), 0.0);
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k)
      y[r] += values[k] * x[cols[k]];
}

SparseMatrix assemble_consistent_mass(const ShapeTable& shape,
                                      const MaterialPointSet& mps) {
  // Deterministic accumulation: ordered map keyed by (row, col).
  std::map<std::pair<NodeIndex, NodeIndex>, double> entries;
  for (std::size_t p = 0; p < shape.particle_count; ++p) {
    auto list = shape.neighbors(p);
    auto N = shape.shape_values(p);
    for (std::size_t a = 0; a < list.size(); ++a)
      for (std::size_t b = 0; b < list.size(); ++b)
        entries[{list[a], list[b]}] += mps.mass[p] * N[a] * N[b];
  }
  SparseMatrix M;
  M.offsets.assign(shape.node_count + 1, 0);
  for (const auto& [key, value] : entries) M.offsets[key.first + 1]++;
  for (std::size_t r = 0; r < shape.node_count; ++r) M.offsets[r + 1] += M.offsets[r];
  M.cols.resize(entries.size());
  M.values.resize(entries.size());
  std::size_t k = 0;
  for (const auto& [key, value] : entries) {
    M.cols[k] = key.second;
    M.values[k] = value;
    ++k;
  }
  return M;
}

std::vector<Vec3> assemble_flux(const ShapeTable& shape, const MaterialPointSet& mps,
                                double kappa) {
  if (!(kappa >= 0.0)) throw Error(ErrorCode::Argument, "assemble_flux requires kappa >= 0");
  std::vector<Vec3> flux(shape.node_count, Vec3::Zero());
  for (std::size_t p = 0; p < shape.particle_count; ++p) {
    auto list = shape.neighbors(p);
    auto dN = shape.shape_gradients(p);
    for (std::size_t k = 0; k < list.size(); ++k)
      flux[list[k]] += mps.mass[p] * kappa * dN[k];
  }
  return flux;
}

MapUpdate update_particles_from_nodes(const std::vector<Vec3>& new_node_positions,
                                      const ShapeTable& shape, MaterialPointSet& mps) {
  if (new_node_positions.size() != shape.node_count ||
      mps.size() != shape.particle_count)
    throw Error(ErrorCode::Argument, "shape table does not match the given sets");
  MapUpdate out;
  out.min_det = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < mps.size(); ++p) {
    auto list = shape.neighbors(p);
    auto N = shape.shape_values(p);
    auto dN = shape.shape_gradients(p);
    Vec3 xnew = Vec3::Zero();
    Mat3 F = Mat3::Zero();
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Vec3& xa = new_node_positions[list[k]];
      xnew += N[k] * xa;
      F += xa * dN[k].transpose();
    }
    double det = F.determinant();
    if (!(det > 0.0)) {
      std::ostringstream os;
      os << "transport map inverted at particle " << p << " (det F = " << det
         << "): the nodal update is not injective at this resolution";
      throw Error(ErrorCode::Inversion, os.str());
    }
    mps.x[p] = xnew;
    mps.volume[p] *= det;
    mps.density[p] = mps.mass[p] / mps.volume[p];
    if (det < out.min_det) {
      out.min_det = det;
      out.argmin = p;
    }
  }
  return out;
}

namespace {

// Jacobi-preconditioned conjugate gradients on the rows with nonzero lumped
// mass; rows without particle support stay frozen.
void solve_consistent(const SparseMatrix& M, const std::vector<double>& lumped,
                      const std::vector<Vec3>& flux, std::vector<Vec3>& velocity) {
  const std::size_t n = M.rows();
  std::vector<double> diag(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = M.offsets[r]; k < M.offsets[r + 1]; ++k)
      if (M.cols[k] == r) diag[r] = M.values[k];

  std::vector<double> x(n), b(n), r(n), z(n), p(n), Ap(n);
  for (int c = 0; c < 3; ++c) {
    double bnorm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = lumped[i] > 0.0 ? flux[i][c] : 0.0;
      x[i] = 0.0;
      bnorm2 += b[i] * b[i];
    }
    if (bnorm2 == 0.0) {
      for (std::size_t i = 0; i < n; ++i) velocity[i][c] = 0.0;
      continue;
    }
    const double tol2 = 1e-20 * bnorm2; // 1e-10 relative residual
    r = b;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
      rz += r[i] * z[i];
    }
    p = z;
    bool converged = false;
    const long max_iters = 10 * static_cast<long>(n) + 100;
    for (long it = 0; it < max_iters; ++it) {
      M.multiply(p, Ap);
      double pAp = 0.0;
      for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
      if (!(pAp > 0.0))
        throw Error(ErrorCode::Numerics,
                    "consistent mass matrix is numerically singular; "
                    "use lumped mass (solver.mass = lumped)");
      double alpha = rz / pAp;
      double rnorm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
        rnorm2 += r[i] * r[i];
      }
      if (rnorm2 <= tol2) {
        converged = true;
        break;
      }
      double rz_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
        rz_new += r[i] * z[i];
      }
      double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (!converged)
      throw Error(ErrorCode::Numerics,
                  "conjugate gradients on the consistent mass matrix did not "
                  "converge; use lumped mass (solver.mass = lumped)");
    for (std::size_t i = 0; i < n; ++i) velocity[i][c] = x[i];
  }
}

} // namespace

DiffusiveOutcome diffusive_step(const Domain& domain, NodeSet& nodes,
                                MaterialPointSet& mps, const ShapeTable& shape,
                                const NeighborTable& table, double kappa, double dt,
                                bool use_lumped) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Argument, "diffusive_step requires dt > 0");
  if (!(kappa >= 0.0))
    throw Error(ErrorCode::Argument, "diffusive_step requires kappa >= 0");
  if (shape.node_count != nodes.size() || shape.particle_count != mps.size())
    throw Error(ErrorCode::Argument, "shape table does not match the given sets");

  DiffusiveOutcome out;
  if (kappa == 0.0) return out; // zero flux: the step is the identity

  {
    double dx = min_shared_node_spacing(nodes, table);
    if (dt > dx * dx / kappa)
      std::fprintf(stderr,
                   "warning: dt = %g exceeds the diffusive stability bound %g\n", dt,
                   dx * dx / kappa);
  }

  std::vector<double> lumped = assemble_lumped_mass(shape, mps);
  std::vector<Vec3> flux = assemble_flux(shape, mps, kappa);
  std::vector<Vec3> velocity(nodes.size(), Vec3::Zero());
  nodes.frozen.assign(nodes.size(), 0);
  if (nodes.pinned.size() != nodes.size()) nodes.pinned.assign(nodes.size(), 0);
  if (use_lumped) {
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      if (!(lumped[a] > 0.0)) {
        nodes.frozen[a] = 1;
        ++out.frozen_nodes;
      } else if (!nodes.pinned[a]) {
        velocity[a] = flux[a] / lumped[a];
      }
    }
  } else {
    SparseMatrix M = assemble_consistent_mass(shape, mps);
    solve_consistent(M, lumped, flux, velocity);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      if (!(lumped[a] > 0.0)) {
        nodes.frozen[a] = 1;
        ++out.frozen_nodes;
      }
      if (nodes.pinned[a]) velocity[a] = Vec3::Zero();
    }
  }

  std::vector<Vec3> xnew(nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (nodes.frozen[a] || nodes.pinned[a]) {
      xnew[a] = nodes.x[a];
      if (nodes.pinned[a]) nodes.frozen[a] = 1;
    } else {
      xnew[a] = nodes.x[a] + dt * velocity[a];
    }
  }

  // Neumann enforcement: exterior nodes return to the boundary and stay
  // pinned there for all later diffusive updates.
  for (std::size_t a = 0; a < nodes.size(); ++a)
    if (signed_distance(domain, xnew[a]) > 0.0) {
      xnew[a] = project_to_boundary(domain, xnew[a]);
      nodes.pinned[a] = 1;
      ++out.projected_nodes;
    }

  MapUpdate map = update_particles_from_nodes(xnew, shape, mps);
  out.min_det = map.min_det;

  const double spill_tol = 1e-12 * std::max(domain.diameter(), 1.0);
  for (std::size_t p = 0; p < mps.size(); ++p)
    if (signed_distance(domain, mps.x[p]) > spill_tol) {
      std::ostringstream os;
      os << "particle " << p << " left the domain during the diffusive step "
         << "(spill over): under-resolved discretization";
      throw Error(ErrorCode::Resolution, os.str());
    }

  nodes.x.swap(xnew);
  return out;
}

SimState init_state(const SimConfig& config) {
  config.validate();
  SimState st;
  st.domain = config.domain;
  st.field = config.field;
  st.lme = config.lme;
  SeedResult seeded = seed(config.domain, config.region, config.spacing, config.rho0);
  st.nodes = std::move(seeded.nodes);
  st.mps = std::move(seeded.mps);
  st.seeded_mass = st.mps.total_mass();
  Vec3 centroid = Vec3::Zero();
  for (std::size_t p = 0; p < st.mps.size(); ++p)
    centroid += st.mps.mass[p] * st.mps.x[p];
  st.reference_point = centroid / st.seeded_mass;
  st.table = build_neighbors(st.nodes, st.mps, st.lme);
  return st;
}

StepDiagnostics diagnostics_of(const SimState& state, double dt) {
  StepDiagnostics d;
  d.step = state.step_index;
  d.time = state.time;
  d.dt = dt;
  d.mass = state.mps.total_mass();
  d.volume = state.mps.total_volume();
  d.mean_density = d.mass / d.volume;
  d.max_radius = 0.0;
  for (const Vec3& x : state.nodes.x)
    d.max_radius = std::max(d.max_radius, (x - state.reference_point).norm());
  d.entropy = entropy(state.mps);
  d.rebuild_count = state.rebuild_count;
  return d;
}

StepDiagnostics step(SimState& state, const SimConfig& config, double dt_limit) {
  auto t0 = std::chrono::steady_clock::now();
  if (!(dt_limit > 0.0)) throw Error(ErrorCode::Argument, "step requires dt_limit > 0");

  double dt = stable_dt(state.nodes, state.table, config.kappa, config.dt_safety);
  dt = std::min(dt, dt_limit);
  if (config.dt_cap > 0.0) dt = std::min(dt, config.dt_cap);
  if (!std::isfinite(dt))
    throw Error(ErrorCode::Config,
                "time step is unbounded (kappa = 0): set time.dt_cap");

  int projected = 0;
  if (!state.field.is_zero()) {
    AdvectOutcome adv = advect_step(state.domain, state.nodes, state.mps, state.field, dt);
    projected += adv.projected_nodes;
  }

  bool rebuilt = false;
  if (needs_rebuild(state.table, state.nodes, state.mps, config.rebuild_tol)) {
    state.table = build_neighbors(state.nodes, state.mps, state.lme);
    ++state.rebuild_count;
    rebuilt = true;
  }

  // Shape functions are recomputed every step from the convected coordinates.
  ShapeTable shape = build_shape_table(state.nodes, state.mps, state.table, state.lme);

  int frozen = 0;
  if (config.kappa > 0.0) {
    DiffusiveOutcome diff =
        diffusive_step(state.domain, state.nodes, state.mps, shape, state.table,
                       config.kappa, dt, config.use_lumped_mass);
    projected += diff.projected_nodes;
    frozen = diff.frozen_nodes;
  }

  state.time += dt;
  ++state.step_index;

  StepDiagnostics d = diagnostics_of(state, dt);
  d.newton_iters = shape.newton_iters_total;
  d.newton_iters_max = shape.newton_iters_max;
  d.rebuilt = rebuilt;
  d.projected_nodes = projected;
  d.frozen_nodes = frozen;
  d.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return d;
}

RunHistory run(const SimConfig& config, const RunSinks& sinks) {
  config.validate();
  SimState state = init_state(config);
  RunHistory history;
  long last_emitted = -1;
  auto emit = [&](const StepDiagnostics& d) {
    history.rows.push_back(d);
    if (sinks.on_history) sinks.on_history(d);
    if (config.write_snapshots && sinks.on_snapshot) sinks.on_snapshot(state, d.step);
    last_emitted = d.step;
  };

  emit(diagnostics_of(state, 0.0));

  const double T = config.end_time;
  const double slack = 1e-12 * std::max(T, 1.0);
  StepDiagnostics last;
  while (state.time < T - slack &&
         (config.max_steps == 0 || state.step_index < config.max_steps)) {
    last = step(state, config, T - state.time);
    if (state.step_index % config.cadence == 0) emit(last);
  }
  if (state.step_index > 0 && last_emitted != state.step_index) emit(last);
  return history;
}

} // namespace otm
