// Command-line front end; talks to the solver library through the C API.

#include "otm/otm.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace {

int exit_code_of(otm_status status) { return otm_status_is_usage(status) ? 1 : 2; }

int fail(otm_status status) {
  std::fprintf(stderr, "error: %s\n", otm_last_error());
  return exit_code_of(status);
}

int cmd_run(const std::string& config_path, const std::string& out_flag) {
  otm_sim* sim = nullptr;
  otm_status st = otm_sim_create_from_file(config_path.c_str(), &sim);
  if (st != OTM_OK) return fail(st);

  // Output directory precedence: --out flag, then OTM_OUTPUT_DIR, then the
  // config's output.dir.
  const char* env_dir = std::getenv("OTM_OUTPUT_DIR");
  const std::string dir = !out_flag.empty() ? out_flag : (env_dir ? env_dir : "");
  if (!dir.empty()) {
    st = otm_sim_set_output_dir(sim, dir.c_str());
    if (st != OTM_OK) {
      otm_sim_destroy(sim);
      return fail(st);
    }
  }

  st = otm_sim_run(sim);
  if (st != OTM_OK) {
    otm_sim_destroy(sim);
    return fail(st);
  }
  otm_step_info info;
  if (otm_sim_info(sim, &info) == OTM_OK)
    std::printf("run finished: %lld steps, t = %.17g, mass = %.17g, "
                "mean density = %.17g\n",
                info.step, info.time, info.mass, info.mean_density);
  otm_sim_destroy(sim);
  return 0;
}

int cmd_check(const std::string& snapshot_path) {
  std::vector<char> report(1 << 16);
  otm_status st = otm_check_snapshot(snapshot_path.c_str(), report.data(), report.size());
  std::fputs(report.data(), stderr);
  if (st != OTM_OK) {
    std::printf("check: FAIL\n");
    return fail(st);
  }
  std::printf("check: OK\n");
  return 0;
}

int cmd_wdist(const std::string& a, const std::string& b, long subsample) {
  double cost = 0.0;
  otm_status st = otm_wasserstein(a.c_str(), b.c_str(), subsample, &cost);
  if (st != OTM_OK) return fail(st);
  std::printf("%.17g\n", cost);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport meshfree advection-diffusion solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  CLI::App* run = app.add_subcommand("run", "run a simulation from a config file");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config and env)");

  std::string snapshot_path;
  CLI::App* check = app.add_subcommand("check", "audit state invariants of a snapshot");
  check->add_option("--snapshot", snapshot_path, "snapshot file")->required();

  std::string snap_a, snap_b;
  long subsample = 500;
  CLI::App* wdist =
      app.add_subcommand("wdist", "exact Wasserstein cost between two snapshots");
  wdist->add_option("--a", snap_a, "first snapshot")->required();
  wdist->add_option("--b", snap_b, "second snapshot")->required();
  wdist->add_option("--subsample", subsample, "subsample size (0 = all particles)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  }

  if (run->parsed()) return cmd_run(config_path, out_dir);
  if (check->parsed()) return cmd_check(snapshot_path);
  if (wdist->parsed()) return cmd_wdist(snap_a, snap_b, subsample);
  return 1;
}
