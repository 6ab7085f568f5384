#include "otm/otm.h"

#include "otm/config.hpp"
#include "otm/error.hpp"
#include "otm/snapshot.hpp"
#include "otm/solver.hpp"
#include "otm/transport_oracle.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace {

thread_local std::string g_last_error;

otm_status code_of(otm::ErrorCode code) {
  using otm::ErrorCode;
  switch (code) {
    case ErrorCode::Argument:   return OTM_ERR_ARGUMENT;
    case ErrorCode::Config:     return OTM_ERR_CONFIG;
    case ErrorCode::Io:         return OTM_ERR_IO;
    case ErrorCode::Resolution: return OTM_ERR_RESOLUTION;
    case ErrorCode::Inversion:  return OTM_ERR_INVERSION;
    case ErrorCode::Numerics:   return OTM_ERR_NUMERICS;
    case ErrorCode::Invariant:  return OTM_ERR_INVARIANT;
  }
  return OTM_ERR_NUMERICS;
}

template <class Fn>
otm_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const otm::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OTM_ERR_NUMERICS;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw otm::Error(otm::ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

otm::DiscreteMeasure subsampled_measure(const otm::MaterialPointSet& mps,
                                        long subsample) {
  otm::DiscreteMeasure m;
  const std::size_t total = mps.size();
  if (subsample <= 0 || static_cast<std::size_t>(subsample) >= total) {
    m.points = mps.x;
    m.weights = mps.mass;
    return m;
  }
  // Deterministic stratified pick: one representative per stratum of the
  // id-ordered particle list.
  const std::size_t n = static_cast<std::size_t>(subsample);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = i * total / n;
    m.points.push_back(mps.x[idx]);
    m.weights.push_back(mps.mass[idx]);
  }
  return m;
}

} // namespace

struct otm_sim {
  otm::SimConfig config;
  std::optional<otm::SimState> state;
  otm::StepDiagnostics last;
  bool has_last = false;

  otm::SimState& ensure_state() {
    if (!state) {
      state = otm::init_state(config);
      if (!has_last) {
        last = otm::diagnostics_of(*state, 0.0);
        has_last = true;
      }
    }
    return *state;
  }
};

extern "C" {

int otm_status_is_usage(otm_status status) {
  return status == OTM_ERR_ARGUMENT || status == OTM_ERR_CONFIG ? 1 : 0;
}

const char* otm_last_error(void) { return g_last_error.c_str(); }

otm_status otm_sim_create(const char* config_text, otm_sim** out) {
  return guarded([&]() -> otm_status {
    if (!config_text || !out)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_create");
    auto sim = std::make_unique<otm_sim>();
    sim->config = otm::parse_config(config_text);
    *out = sim.release();
    return OTM_OK;
  });
}

otm_status otm_sim_create_from_file(const char* path, otm_sim** out) {
  return guarded([&]() -> otm_status {
    if (!path || !out)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_create_from_file");
    return otm_sim_create(read_file(path).c_str(), out);
  });
}

otm_status otm_sim_create_from_preset(const char* name, otm_sim** out) {
  return guarded([&]() -> otm_status {
    if (!name || !out)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_create_from_preset");
    return otm_sim_create(otm::preset_text(name).c_str(), out);
  });
}

void otm_sim_destroy(otm_sim* sim) { delete sim; }

otm_status otm_sim_set_output_dir(otm_sim* sim, const char* dir) {
  return guarded([&]() -> otm_status {
    if (!sim || !dir)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_set_output_dir");
    sim->config.output_dir = dir;
    return OTM_OK;
  });
}

static void fill_info(const otm::StepDiagnostics& d, otm_step_info* info) {
  if (!info) return;
  info->step = d.step;
  info->time = d.time;
  info->dt = d.dt;
  info->mass = d.mass;
  info->mean_density = d.mean_density;
  info->volume = d.volume;
  info->max_radius = d.max_radius;
  info->entropy = d.entropy;
  info->rebuilds = d.rebuild_count;
  info->newton_iters = d.newton_iters;
  info->projected_nodes = d.projected_nodes;
  info->frozen_nodes = d.frozen_nodes;
}

otm_status otm_sim_run(otm_sim* sim) {
  return guarded([&]() -> otm_status {
    if (!sim) throw otm::Error(otm::ErrorCode::Argument, "null simulation handle");
    namespace fs = std::filesystem;
    const fs::path dir = sim->config.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
      throw otm::Error(otm::ErrorCode::Io,
                       "cannot create output directory '" + dir.string() + "'");

    std::ofstream history(dir / "history.csv");
    if (!history)
      throw otm::Error(otm::ErrorCode::Io,
                       "cannot open '" + (dir / "history.csv").string() + "'");
    history << "step,time,dt,mass,mean_density,volume,max_radius,entropy,rebuilds\n";
    history.flush();

    otm::RunSinks sinks;
    sinks.on_history = [&](const otm::StepDiagnostics& d) {
      char buf[512];
      std::snprintf(buf, sizeof buf,
                    "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n", d.step,
                    d.time, d.dt, d.mass, d.mean_density, d.volume, d.max_radius,
                    d.entropy, d.rebuild_count);
      history << buf;
      history.flush(); // partial history survives an abort
      sim->last = d;
      sim->has_last = true;
    };
    sinks.on_snapshot = [&](const otm::SimState& st, long step) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%06ld.txt", step);
      otm::write_snapshot((dir / name).string(), st.nodes, st.mps, st.time);
    };

    otm::RunHistory hist = otm::run(sim->config, sinks);
    sim->state.reset(); // run() owns its state; handle diagnostics stay at the end
    if (!hist.rows.empty()) sim->last = hist.rows.back();
    return OTM_OK;
  });
}

otm_status otm_sim_step(otm_sim* sim, otm_step_info* info) {
  return guarded([&]() -> otm_status {
    if (!sim) throw otm::Error(otm::ErrorCode::Argument, "null simulation handle");
    otm::SimState& st = sim->ensure_state();
    double remaining = sim->config.end_time - st.time;
    if (!(remaining > 0.0))
      throw otm::Error(otm::ErrorCode::Argument, "simulation already reached time.end");
    sim->last = otm::step(st, sim->config, remaining);
    fill_info(sim->last, info);
    return OTM_OK;
  });
}

otm_status otm_sim_info(otm_sim* sim, otm_step_info* info) {
  return guarded([&]() -> otm_status {
    if (!sim || !info)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_info");
    sim->ensure_state();
    fill_info(sim->last, info);
    return OTM_OK;
  });
}

otm_status otm_sim_write_snapshot(otm_sim* sim, const char* path) {
  return guarded([&]() -> otm_status {
    if (!sim || !path)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_sim_write_snapshot");
    otm::SimState& st = sim->ensure_state();
    otm::write_snapshot(path, st.nodes, st.mps, st.time);
    return OTM_OK;
  });
}

otm_status otm_check_snapshot(const char* path, char* report, size_t capacity) {
  return guarded([&]() -> otm_status {
    if (!path) throw otm::Error(otm::ErrorCode::Argument, "null snapshot path");
    otm::SnapshotData snap = otm::read_snapshot(path);
    std::vector<std::string> violations = otm::audit_state(snap.mps);
    std::ostringstream os;
    os << "checked " << snap.nodes.size() << " nodes, " << snap.mps.size()
       << " material points at t = " << snap.time << "\n";
    os << "notice: partition of unity is not checkable from a snapshot; skipped\n";
    for (const std::string& v : violations) os << "violation: " << v << "\n";
    std::string text = os.str();
    if (report && capacity > 0) {
      std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(report, text.c_str(), n);
      report[n] = '\0';
    }
    if (!violations.empty())
      throw otm::Error(otm::ErrorCode::Invariant, violations.front());
    return OTM_OK;
  });
}

otm_status otm_wasserstein(const char* snapshot_a, const char* snapshot_b,
                           long subsample, double* cost) {
  return guarded([&]() -> otm_status {
    if (!snapshot_a || !snapshot_b || !cost)
      throw otm::Error(otm::ErrorCode::Argument, "null argument to otm_wasserstein");
    otm::SnapshotData a = otm::read_snapshot(snapshot_a);
    otm::SnapshotData b = otm::read_snapshot(snapshot_b);
    otm::DiscreteMeasure mu = subsampled_measure(a.mps, subsample);
    otm::DiscreteMeasure nu = subsampled_measure(b.mps, subsample);
    *cost = otm::wasserstein2(mu, nu).cost;
    return OTM_OK;
  });
}

int otm_preset_count(void) { return static_cast<int>(otm::preset_names().size()); }

const char* otm_preset_name(int index) {
  static thread_local std::string holder;
  auto names = otm::preset_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  holder = names[index];
  return holder.c_str();
}

const char* otm_preset_text(const char* name) {
  static thread_local std::string holder;
  if (!name) return nullptr;
  try {
    holder = otm::preset_text(name);
  } catch (const otm::Error&) {
    return nullptr;
  }
  return holder.c_str();
}

} // extern "C"
