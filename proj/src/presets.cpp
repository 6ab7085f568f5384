#include "otm/config.hpp"

#include "otm/error.hpp"

#include <array>
#include <utility>

namespace otm {

namespace {

// Built-in experiments. The sphere_* family is the free-expansion problem in
// a spherical container; annulus_* is the rotating channel with square cross
// section; bucket_* is the rotating finite cylinder. The *_desk variants are
// small enough for test suites; the remaining presets reproduce the
// publication-scale setups.
struct Preset {
  const char* name;
  const char* text;
};

constexpr const char* kSphereDesk = R"(# Free diffusion of a unit ball inside a sphere of radius 3.
domain.kind = sphere
domain.radius = 3
region.kind = sphere
region.radius = 1
rho0 = 1
kappa = 0.05
spacing = 0.25
time.end = 25
output.cadence = 25
)";

constexpr const char* kSphereDeskFine = R"(# sphere_desk at roughly twice the nodal resolution.
domain.kind = sphere
domain.radius = 3
region.kind = sphere
region.radius = 1
rho0 = 1
kappa = 0.05
spacing = 0.19
time.end = 25
output.cadence = 25
)";

constexpr const char* kAnnulusDesk = R"(# Pure advection in the circular channel of square cross section:
# rigid rotation at angular velocity 4, no diffusion, 500 fixed steps.
domain.kind = annulus
domain.inner_radius = 0.25
domain.outer_radius = 0.5
domain.half_height = 0.125
region.kind = sphere
region.center = 0.375 0 0
region.radius = 0.125
rho0 = 1
kappa = 0
spacing = 0.037
advection.kind = rigid_rotation
advection.omega = 4
time.end = 3
time.dt_cap = 0.005
time.max_steps = 500
output.cadence = 1
)";

constexpr const char* kAnnulusUnderresolved = R"(# Deliberately under-resolved advection-diffusion in the channel: the
# tenfold diffusivity outruns what this nodal spacing can resolve and the
# run is expected to abort with a resolution (spill over) error.
domain.kind = annulus
domain.inner_radius = 0.25
domain.outer_radius = 0.5
domain.half_height = 0.125
region.kind = sphere
region.center = 0.375 0 0
region.radius = 0.125
rho0 = 1
kappa = 0.01
spacing = 0.037
advection.kind = rigid_rotation
advection.omega = 4
time.end = 1
time.dt_cap = 0.005
output.cadence = 1
)";

constexpr const char* kSphereCoarse = R"(# Publication-scale expanding sphere, coarse discretization.
domain.kind = sphere
domain.radius = 7
region.kind = sphere
region.radius = 1
rho0 = 1
kappa = 0.05
spacing = 0.27
time.end = 100
output.cadence = 10
)";

constexpr const char* kSphereMedium = R"(# Publication-scale expanding sphere, medium discretization.
domain.kind = sphere
domain.radius = 7
region.kind = sphere
region.radius = 1
rho0 = 1
kappa = 0.05
spacing = 0.215
time.end = 100
output.cadence = 10
)";

constexpr const char* kSphereFine = R"(# Publication-scale expanding sphere, fine discretization.
domain.kind = sphere
domain.radius = 7
region.kind = sphere
region.radius = 1
rho0 = 1
kappa = 0.05
spacing = 0.145
time.end = 100
output.cadence = 10
)";

constexpr const char* kAnnulusAdvect = R"(# Publication-scale pure advection in the circular channel.
domain.kind = annulus
domain.inner_radius = 0.25
domain.outer_radius = 0.5
domain.half_height = 0.125
region.kind = sphere
region.center = 0.375 0 0
region.radius = 0.125
rho0 = 1
kappa = 0
spacing = 0.022
advection.kind = rigid_rotation
advection.omega = 4
time.end = 3
time.dt_cap = 0.005
output.cadence = 20
)";

constexpr const char* kAnnulusAdvdiff = R"(# Publication-scale combined advection-diffusion in the circular channel.
domain.kind = annulus
domain.inner_radius = 0.25
domain.outer_radius = 0.5
domain.half_height = 0.125
region.kind = sphere
region.center = 0.375 0 0
region.radius = 0.125
rho0 = 1
kappa = 0.001
spacing = 0.022
advection.kind = rigid_rotation
advection.omega = 4
time.end = 3
time.dt_cap = 0.005
output.cadence = 20
)";

constexpr const char* kBucketTemplate0 = R"(# Publication-scale advection-diffusion in a rotating finite cylinder.
domain.kind = cylinder
domain.radius = 0.5
domain.half_length = 0.125
region.kind = sphere
region.radius = 0.125
rho0 = 1
spacing = 0.022
advection.kind = rigid_rotation
advection.omega = 4
time.end = 1
time.dt_cap = 0.005
output.cadence = 10
)";

std::string bucket_with_kappa(const char* kappa) {
  return std::string(kBucketTemplate0) + "kappa = " + kappa + "\n";
}

} // namespace

std::vector<std::string> preset_names() {
  return {"sphere_desk",   "sphere_desk_fine", "annulus_desk", "annulus_underresolved",
          "sphere_coarse", "sphere_medium",    "sphere_fine",  "annulus_advect",
          "annulus_advdiff", "bucket_k005",    "bucket_k0075", "bucket_k01"};
}

std::string preset_text(const std::string& name) {
  if (name == "sphere_desk") return kSphereDesk;
  if (name == "sphere_desk_fine") return kSphereDeskFine;
  if (name == "annulus_desk") return kAnnulusDesk;
  if (name == "annulus_underresolved") return kAnnulusUnderresolved;
  if (name == "sphere_coarse") return kSphereCoarse;
  if (name == "sphere_medium") return kSphereMedium;
  if (name == "sphere_fine") return kSphereFine;
  if (name == "annulus_advect") return kAnnulusAdvect;
  if (name == "annulus_advdiff") return kAnnulusAdvdiff;
  if (name == "bucket_k005") return bucket_with_kappa("0.005");
  if (name == "bucket_k0075") return bucket_with_kappa("0.0075");
  if (name == "bucket_k01") return bucket_with_kappa("0.01");
  throw Error(ErrorCode::Config, "unknown preset '" + name + "'");
}

} // namespace otm
