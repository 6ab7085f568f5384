#pragma once

#include "otm/advection.hpp"
#include "otm/config.hpp"
#include "otm/discretization.hpp"
#include "otm/domain.hpp"
#include "otm/maxent.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace otm {

/// Per-step record of the conserved and monitored quantities.
struct StepDiagnostics {
  long step = 0;
  double time = 0.0;
  double dt = 0.0;
  double mass = 0.0;         // sum of particle masses (bitwise constant)
  double mean_density = 0.0; // total mass / occupied volume
  double volume = 0.0;       // occupied volume: sum of particle volumes
  double max_radius = 0.0;   // farthest node from the initial mass centroid
  double entropy = 0.0;      // sum m_p log(m_p / v_p)
  long newton_iters = 0;
  int newton_iters_max = 0;
  bool rebuilt = false;
  long rebuild_count = 0;    // cumulative over the run
  int projected_nodes = 0;   // boundary projections this step
  int frozen_nodes = 0;      // zero-lumped-mass nodes this step
  double wall_ms = 0.0;
};

struct RunHistory {
  std::vector<StepDiagnostics> rows;
};

/// Diffusive stability bound: safety * dx_min^2 / kappa with dx_min the
/// minimum distance between nodes sharing a particle neighborhood. Returns
/// +infinity for kappa = 0 (pure advection).
double stable_dt(const NodeSet& nodes, const NeighborTable& table, double kappa,
                 double safety);

/// Row-sum lumped mass vector: entry a = sum_p m_p N_a(x_p).
std::vector<double> assemble_lumped_mass(const ShapeTable& shape,
                                         const MaterialPointSet& mps);

/// Symmetric sparse matrix in compressed-row form (full storage).
struct SparseMatrix {
  std::vector<std::size_t> offsets;
  std::vector<NodeIndex> cols;
  std::vector<double> values;
  std::size_t rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
};

/// Consistent (Gram) mass matrix M_ab = sum_p m_p N_a(x_p) N_b(x_p), entries
/// only for node pairs sharing a particle.
SparseMatrix assemble_consistent_mass(const ShapeTable& shape,
                                      const MaterialPointSet& mps);

/// Nodal flux array f_a = sum_p m_p kappa grad N_a(x_p).
std::vector<Vec3> assemble_flux(const ShapeTable& shape, const MaterialPointSet& mps,
                                double kappa);

struct MapUpdate {
  double min_det = 1.0;
  std::size_t argmin = 0;
};

/// Pushes every particle through the interpolated incremental map defined by
/// the new nodal coordinates: x_p <- sum_a x_a N_a(x_p), F_p = sum_a x_a
/// (grad N_a)^T, v_p <- det(F_p) v_p, rho_p = m_p / v_p. Throws
/// Error(Inversion) at the first non-positive Jacobian.
MapUpdate update_particles_from_nodes(const std::vector<Vec3>& new_node_positions,
                                      const ShapeTable& shape, MaterialPointSet& mps);

struct DiffusiveOutcome {
  int frozen_nodes = 0;
  int projected_nodes = 0;
  double min_det = 1.0;
};

/// Diffusive fractional step: ballistic nodal update x += dt M^-1 f (diagonal
/// solve when lumped, conjugate gradients otherwise), Neumann enforcement by
/// boundary projection of exterior nodes, then the particle map update.
DiffusiveOutcome diffusive_step(const Domain& domain, NodeSet& nodes,
                                MaterialPointSet& mps, const ShapeTable& shape,
                                const NeighborTable& table, double kappa, double dt,
                                bool use_lumped);

/// Complete mutable simulation state.
struct SimState {
  Domain domain;
  AdvectionField field;
  LmeParams lme;
  NodeSet nodes;
  MaterialPointSet mps;
  NeighborTable table;
  double time = 0.0;
  long step_index = 0;
  long rebuild_count = 0;
  Vec3 reference_point = Vec3::Zero(); // initial mass centroid
  double seeded_mass = 0.0;
};

/// Seeds the state and builds the initial neighbor table.
SimState init_state(const SimConfig& config);

StepDiagnostics diagnostics_of(const SimState& state, double dt);

/// One full time step: advective fractional step, neighbor-list rebuild on
/// distortion, shape-function rebuild, diffusive fractional step. The step
/// size is min(dt_cap, stable_dt, dt_limit).
StepDiagnostics step(SimState& state, const SimConfig& config,
                     double dt_limit = std::numeric_limits<double>::infinity());

struct RunSinks {
  std::function<void(const StepDiagnostics&)> on_history;
  std::function<void(const SimState&, long step)> on_snapshot;
};

/// Drives the stepper from t = 0 to time.end (or max_steps), emitting history
/// rows and snapshots at the configured cadence. Partial output is emitted
/// before any abort propagates.
RunHistory run(const SimConfig& config, const RunSinks& sinks = {});

} // namespace otm
