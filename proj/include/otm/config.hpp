#pragma once

#include "otm/advection.hpp"
#include "otm/domain.hpp"
#include "otm/maxent.hpp"

#include <string>
#include <vector>

namespace otm {

/// Full experiment description, parsed from the flat key = value format
/// documented in configs/schema.cfg.
struct SimConfig {
  Domain domain;                 // container
  Domain region;                 // support of the initial density
  double rho0 = 1.0;             // uniform initial density
  double kappa = 0.0;            // diffusivity
  AdvectionField field;          // advection velocity
  double spacing = 0.0;          // seeding lattice spacing
  LmeParams lme;

  double dt_safety = 0.1;        // factor on the diffusive stability bound
  double dt_cap = 0.0;           // hard step cap; 0 = none
  double end_time = 0.0;
  long max_steps = 0;            // 0 = until end_time
  long cadence = 1;              // output every this many steps
  double rebuild_tol = 0.1;      // neighbor-list distortion tolerance
  bool use_lumped_mass = true;
  std::string output_dir = "out";
  bool write_snapshots = true;
  long seed = 0;                 // ordering tiebreak reservation; runs use no RNG

  void validate() const;
};

/// Parses the flat config text. Syntax errors carry the line number; unknown
/// keys and invariant violations carry the key name.
SimConfig parse_config(const std::string& text);

/// Canonical text form; parse(serialize(c)) reproduces c.
std::string serialize_config(const SimConfig& config);

std::vector<std::string> preset_names();

/// Built-in experiment presets (also shipped under configs/). Throws
/// Error(Config) for an unknown name.
std::string preset_text(const std::string& name);

} // namespace otm
