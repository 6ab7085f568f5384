#pragma once

#include "otm/discretization.hpp"
#include "otm/solver.hpp"

#include <string>
#include <vector>

namespace otm {

/// Writes the plain-text snapshot format, version 1:
///   # otm-snapshot v1 t=<time>
///   kind,id,x,y,z,mass,volume,density
/// with kind in {node, mp}, node rows first (mass/volume/density 0), decimal
/// floats at full round-trip precision.
void write_snapshot(const std::string& path, const NodeSet& nodes,
                    const MaterialPointSet& mps, double time);

struct SnapshotData {
  NodeSet nodes;
  MaterialPointSet mps;
  double time = 0.0;
};

/// Inverse of write_snapshot. Strict on format (version tag, field counts,
/// id ordering), permissive on values so that invariant audits can load and
/// report broken states.
SnapshotData read_snapshot(const std::string& path);

/// History CSV: step,time,dt,mass,mean_density,volume,max_radius,entropy,rebuilds.
void write_history(const std::string& path, const RunHistory& history);

/// State invariants checkable from a snapshot alone; returns human-readable
/// violation lines (empty = clean). Partition of unity needs shape functions
/// and is deliberately not audited here.
std::vector<std::string> audit_state(const MaterialPointSet& mps);

} // namespace otm
