#pragma once

#include "otm/domain.hpp"
#include "otm/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace otm {

struct LmeParams; // maxent.hpp

/// Nodal point set carrying the interpolated incremental transport map.
struct NodeSet {
  std::vector<Vec3> x;
  /// Transient per-step markers: nodes held fixed in the last diffusive
  /// update (no lumped mass, or pinned at the boundary).
  std::vector<std::uint8_t> frozen;
  /// Nodes that reached the boundary: they are pinned against further
  /// diffusive motion, which enforces the zero-flux condition there and
  /// keeps boundary crowding from collapsing the stable time step.
  /// Advection still transports them.
  std::vector<std::uint8_t> pinned;

  std::size_t size() const { return x.size(); }
};

/// Dirac carriers: constant masses, evolving positions, volumes, densities.
struct MaterialPointSet {
  std::vector<Vec3> x;
  std::vector<double> mass;    // constant after seeding
  std::vector<double> volume;  // > 0, fatal inversion otherwise
  std::vector<double> density; // mass / volume

  std::size_t size() const { return x.size(); }
  double total_mass() const;
  double total_volume() const;
};

/// Per-particle neighbor-node lists in compressed-row layout, plus the
/// support data frozen at build time: cutoff radius, farthest-neighbor
/// distance gauge (distortion reference) and local node spacing h_p.
struct NeighborTable {
  std::vector<std::size_t> offsets;  // particle_count + 1
  std::vector<NodeIndex> nodes;      // sorted per particle
  std::vector<double> cutoff;        // r_p
  std::vector<double> gauge;         // max |x_a - x_p| over retained, at build
  std::vector<double> spacing;       // h_p: mean distance to 4 nearest nodes
  std::size_t node_count = 0;
  std::size_t particle_count = 0;

  std::span<const NodeIndex> neighbors(std::size_t p) const {
    return {nodes.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
};

struct SeedResult {
  NodeSet nodes;
  MaterialPointSet mps;
};

/// Lowest-level seeding hook: explicit tetrahedra, one material point per
/// tetrahedron at its barycenter with v_p the tetrahedron volume and
/// m_p = rho0 * v_p. Vertices become the nodes as given.
SeedResult seed_from_tets(const std::vector<Vec3>& vertices,
                          const std::vector<std::array<int, 4>>& tets, double rho0);

/// Seeds nodes and material points from a conforming tetrahedralization of a
/// structured lattice restricted to the initial region: cubic cells of edge
/// target_spacing, each split into five tetrahedra (parity-mirrored for face
/// conformity), keeping tetrahedra whose four vertices lie in the region.
SeedResult seed(const Domain& domain, const Domain& initial_region,
                double target_spacing, double rho0);

/// Lists, for every particle, all nodes within its cutoff radius
/// r_p = sqrt(log(1/eps_cut) / beta_p) with beta_p = gamma / h_p^2.
/// Grid-hash accelerated; result identical to a brute-force scan, with the
/// closed-ball convention at exactly r_p.
NeighborTable build_neighbors(const NodeSet& nodes, const MaterialPointSet& mps,
                              const LmeParams& lme);

/// Distortion trigger: true when any particle's farthest retained neighbor
/// distance has drifted from the build-time gauge by a relative factor
/// exceeding tol, or any retained neighbor has left the cutoff ball.
bool needs_rebuild(const NeighborTable& table, const NodeSet& nodes,
                   const MaterialPointSet& mps, double tol);

/// Minimum node-node distance among nodes sharing a particle neighborhood;
/// the length scale of the diffusive stability bound.
double min_shared_node_spacing(const NodeSet& nodes, const NeighborTable& table);

} // namespace otm
