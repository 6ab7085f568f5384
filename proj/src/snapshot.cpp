#include "otm/snapshot.hpp"

#include "otm/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace otm {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void io_fail(const std::string& path, const char* action) {
  throw Error(ErrorCode::Io, std::string("cannot ") + action + " '" + path + "'");
}

[[noreturn]] void row_fail(const std::string& path, int line, const std::string& why) {
  std::ostringstream os;
  os << path << ": malformed snapshot row at line " << line << ": " << why;
  throw Error(ErrorCode::Io, os.str());
}

double parse_field(const std::string& path, int line, const std::string& text) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    row_fail(path, line, "cannot parse number '" + text + "'");
  return v;
}

} // namespace

void write_snapshot(const std::string& path, const NodeSet& nodes,
                    const MaterialPointSet& mps, double time) {
  std::ofstream out(path);
  if (!out) io_fail(path, "open for writing");
  out << "# otm-snapshot v1 t=" << fmt(time) << "\n";
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    const Vec3& x = nodes.x[a];
    out << "node," << a << ',' << fmt(x.x()) << ',' << fmt(x.y()) << ',' << fmt(x.z())
        << ",0,0,0\n";
  }
  for (std::size_t p = 0; p < mps.size(); ++p) {
    const Vec3& x = mps.x[p];
    out << "mp," << p << ',' << fmt(x.x()) << ',' << fmt(x.y()) << ',' << fmt(x.z())
        << ',' << fmt(mps.mass[p]) << ',' << fmt(mps.volume[p]) << ','
        << fmt(mps.density[p]) << "\n";
  }
  if (!out.flush()) io_fail(path, "write");
}

SnapshotData read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "open for reading");
  std::string header;
  if (!std::getline(in, header)) io_fail(path, "read header from");
  const std::string magic = "# otm-snapshot ";
  if (header.rfind(magic, 0) != 0)
    throw Error(ErrorCode::Io, path + ": not an otm snapshot file");
  const std::string expect = magic + "v1 t=";
  if (header.rfind(expect, 0) != 0)
    throw Error(ErrorCode::Io, path + ": unsupported snapshot version (expected v1)");

  SnapshotData snap;
  snap.time = parse_field(path, 1, header.substr(expect.size()));

  std::string line;
  int lineno = 1;
  bool in_mps = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) row_fail(path, lineno, "expected 8 comma-separated fields");
    double vals[6];
    for (int k = 0; k < 6; ++k) vals[k] = parse_field(path, lineno, fields[k + 2]);
    Vec3 x(vals[0], vals[1], vals[2]);
    if (fields[0] == "node") {
      if (in_mps) row_fail(path, lineno, "node row after mp rows");
      if (fields[1] != std::to_string(snap.nodes.size()))
        row_fail(path, lineno, "node id out of order");
      snap.nodes.x.push_back(x);
    } else if (fields[0] == "mp") {
      in_mps = true;
      if (fields[1] != std::to_string(snap.mps.size()))
        row_fail(path, lineno, "mp id out of order");
      snap.mps.x.push_back(x);
      snap.mps.mass.push_back(vals[3]);
      snap.mps.volume.push_back(vals[4]);
      snap.mps.density.push_back(vals[5]);
    } else {
      row_fail(path, lineno, "unknown record kind '" + fields[0] + "'");
    }
  }
  snap.nodes.frozen.assign(snap.nodes.size(), 0);
  snap.nodes.pinned.assign(snap.nodes.size(), 0);
  return snap;
}

void write_history(const std::string& path, const RunHistory& history) {
  std::ofstream out(path);
  if (!out) io_fail(path, "open for writing");
  out << "step,time,dt,mass,mean_density,volume,max_radius,entropy,rebuilds\n";
  for (const StepDiagnostics& d : history.rows)
    out << d.step << ',' << fmt(d.time) << ',' << fmt(d.dt) << ',' << fmt(d.mass) << ','
        << fmt(d.mean_density) << ',' << fmt(d.volume) << ',' << fmt(d.max_radius)
        << ',' << fmt(d.entropy) << ',' << d.rebuild_count << "\n";
  if (!out.flush()) io_fail(path, "write");
}

std::vector<std::string> audit_state(const MaterialPointSet& mps) {
  std::vector<std::string> violations;
  auto report = [&](std::size_t p, const std::string& what) {
    std::ostringstream os;
    os << "particle " << p << ": " << what;
    violations.push_back(os.str());
  };
  for (std::size_t p = 0; p < mps.size(); ++p) {
    if (!(mps.mass[p] > 0.0)) report(p, "nonpositive mass " + fmt(mps.mass[p]));
    if (!(mps.volume[p] > 0.0)) report(p, "nonpositive volume " + fmt(mps.volume[p]));
    if (mps.mass[p] > 0.0 && mps.volume[p] > 0.0) {
      double coherence = std::abs(mps.density[p] * mps.volume[p] - mps.mass[p]);
      if (coherence > 1e-14 * mps.mass[p])
        report(p, "density * volume differs from mass by " + fmt(coherence));
    }
  }
  return violations;
}

} // namespace otm
