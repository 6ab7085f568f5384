#include "otm/config.hpp"

#include "otm/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

namespace otm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct RawEntry {
  std::string value;
  int line = 0;
  bool consumed = false;
};

class KeyMap {
public:
  explicit KeyMap(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string stripped = trim(line);
      if (stripped.empty()) continue;
      std::size_t eq = stripped.find('=');
      if (eq == std::string::npos) {
        std::ostringstream os;
        os << "config syntax error at line " << lineno << ": expected 'key = value'";
        throw Error(ErrorCode::Config, os.str());
      }
      std::string key = trim(stripped.substr(0, eq));
      std::string value = trim(stripped.substr(eq + 1));
      if (key.empty()) {
        std::ostringstream os;
        os << "config syntax error at line " << lineno << ": empty key";
        throw Error(ErrorCode::Config, os.str());
      }
      if (entries_.count(key)) {
        std::ostringstream os;
        os << "duplicate key '" << key << "' at line " << lineno;
        throw Error(ErrorCode::Config, os.str());
      }
      entries_[key] = RawEntry{value, lineno, false};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw Error(ErrorCode::Config, "missing required key '" + key + "'");
    it->second.consumed = true;
    if (it->second.value.empty())
      throw Error(ErrorCode::Config, "empty value for key '" + key + "'");
    return it->second.value;
  }

  std::string take_or(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return take(key);
  }

  void finish() const {
    for (const auto& [key, entry] : entries_)
      if (!entry.consumed) {
        std::ostringstream os;
        os << "unknown or inapplicable key '" << key << "' at line " << entry.line;
        throw Error(ErrorCode::Config, os.str());
      }
  }

private:
  std::map<std::string, RawEntry> entries_;
};

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || !trim(end).empty())
    throw Error(ErrorCode::Config, "key '" + key + "': cannot parse number '" + value + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || !trim(end).empty())
    throw Error(ErrorCode::Config, "key '" + key + "': cannot parse integer '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::Config, "key '" + key + "': expected true or false, got '" + value + "'");
}

Vec3 parse_vec3(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  double x, y, z;
  if (!(in >> x >> y >> z))
    throw Error(ErrorCode::Config, "key '" + key + "': expected three numbers, got '" + value + "'");
  std::string rest;
  if (in >> rest)
    throw Error(ErrorCode::Config, "key '" + key + "': trailing text after vector");
  return Vec3(x, y, z);
}

Domain parse_domain(KeyMap& map, const std::string& prefix) {
  auto dbl = [&](const std::string& k) { return parse_double(prefix + k, map.take(prefix + k)); };
  auto vec = [&](const std::string& k, const Vec3& dflt) {
    std::string key = prefix + k;
    return map.has(key) ? parse_vec3(key, map.take(key)) : dflt;
  };
  std::string kind = map.take(prefix + "kind");
  if (kind == "sphere")
    return Domain::sphere(vec("center", Vec3::Zero()), dbl("radius"));
  if (kind == "cylinder")
    return Domain::cylinder(vec("center", Vec3::Zero()), vec("axis", Vec3(0, 0, 1)),
                            dbl("radius"), dbl("half_length"));
  if (kind == "annulus")
    return Domain::annulus(vec("center", Vec3::Zero()), vec("axis", Vec3(0, 0, 1)),
                           dbl("inner_radius"), dbl("outer_radius"), dbl("half_height"));
  if (kind == "halfspace")
    return Domain::half_space(vec("center", Vec3::Zero()), vec("axis", Vec3(0, 0, 1)));
  throw Error(ErrorCode::Config, "key '" + prefix + "kind': unknown domain kind '" + kind + "'");
}

AdvectionField parse_field(KeyMap& map) {
  std::string kind = map.take_or("advection.kind", "zero");
  if (kind == "zero") return AdvectionField::zero();
  if (kind == "rigid_rotation") {
    Vec3 point = map.has("advection.axis_point")
                     ? parse_vec3("advection.axis_point", map.take("advection.axis_point"))
                     : Vec3::Zero();
    Vec3 axis = map.has("advection.axis")
                    ? parse_vec3("advection.axis", map.take("advection.axis"))
                    : Vec3(0, 0, 1);
    double omega = parse_double("advection.omega", map.take("advection.omega"));
    return AdvectionField::rigid_rotation(point, axis, omega);
  }
  if (kind == "named") {
    std::string name = map.take("advection.name");
    Vec3 center = map.has("advection.center")
                      ? parse_vec3("advection.center", map.take("advection.center"))
                      : Vec3::Zero();
    double rate = parse_double("advection.rate", map.take("advection.rate"));
    return AdvectionField::named(name, center, rate);
  }
  throw Error(ErrorCode::Config, "key 'advection.kind': unknown kind '" + kind + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vec3(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

void serialize_domain(std::ostream& os, const Domain& d, const std::string& prefix) {
  switch (d.kind) {
    case DomainKind::Sphere:
      os << prefix << "kind = sphere\n";
      os << prefix << "center = " << format_vec3(d.center) << "\n";
      os << prefix << "radius = " << format_double(d.radius) << "\n";
      return;
    case DomainKind::Cylinder:
      os << prefix << "kind = cylinder\n";
      os << prefix << "center = " << format_vec3(d.center) << "\n";
      os << prefix << "axis = " << format_vec3(d.axis) << "\n";
      os << prefix << "radius = " << format_double(d.radius) << "\n";
      os << prefix << "half_length = " << format_double(d.half_length) << "\n";
      return;
    case DomainKind::Annulus:
      os << prefix << "kind = annulus\n";
      os << prefix << "center = " << format_vec3(d.center) << "\n";
      os << prefix << "axis = " << format_vec3(d.axis) << "\n";
      os << prefix << "inner_radius = " << format_double(d.inner_radius) << "\n";
      os << prefix << "outer_radius = " << format_double(d.outer_radius) << "\n";
      os << prefix << "half_height = " << format_double(d.half_height) << "\n";
      return;
    case DomainKind::HalfSpace:
      os << prefix << "kind = halfspace\n";
      os << prefix << "center = " << format_vec3(d.center) << "\n";
      os << prefix << "axis = " << format_vec3(d.axis) << "\n";
      return;
  }
}

} // namespace

void SimConfig::validate() const {
  domain.validate();
  region.validate();
  lme.validate();
  if (!(rho0 > 0.0)) throw Error(ErrorCode::Config, "rho0 must be > 0");
  if (!(kappa >= 0.0)) throw Error(ErrorCode::Config, "kappa must be >= 0");
  if (!(spacing > 0.0)) throw Error(ErrorCode::Config, "spacing must be > 0");
  if (!(end_time > 0.0)) throw Error(ErrorCode::Config, "time.end must be > 0");
  if (cadence < 1) throw Error(ErrorCode::Config, "output.cadence must be >= 1");
  if (!(dt_safety > 0.0 && dt_safety < 1.0))
    throw Error(ErrorCode::Config, "time.dt_safety must lie in (0, 1)");
  if (dt_cap < 0.0) throw Error(ErrorCode::Config, "time.dt_cap must be >= 0");
  if (max_steps < 0) throw Error(ErrorCode::Config, "time.max_steps must be >= 0");
  if (!(rebuild_tol > 0.0)) throw Error(ErrorCode::Config, "rebuild.tol must be > 0");
  if (seed < 0) throw Error(ErrorCode::Config, "seed must be >= 0");
}

SimConfig parse_config(const std::string& text) {
  KeyMap map(text);
  SimConfig c;
  c.domain = parse_domain(map, "domain.");
  c.region = parse_domain(map, "region.");
  c.rho0 = parse_double("rho0", map.take_or("rho0", "1"));
  c.kappa = parse_double("kappa", map.take("kappa"));
  c.spacing = parse_double("spacing", map.take("spacing"));
  c.field = parse_field(map);
  c.lme.gamma = parse_double("lme.gamma", map.take_or("lme.gamma", "1.8"));
  c.lme.eps_cut = parse_double("lme.eps_cut", map.take_or("lme.eps_cut", "1e-6"));
  c.lme.newton_tol = parse_double("lme.newton_tol", map.take_or("lme.newton_tol", "1e-12"));
  c.lme.max_newton_iters = static_cast<int>(
      parse_long("lme.max_newton_iters", map.take_or("lme.max_newton_iters", "50")));
  c.end_time = parse_double("time.end", map.take("time.end"));
  c.dt_safety = parse_double("time.dt_safety", map.take_or("time.dt_safety", "0.1"));
  c.dt_cap = parse_double("time.dt_cap", map.take_or("time.dt_cap", "0"));
  c.max_steps = parse_long("time.max_steps", map.take_or("time.max_steps", "0"));
  c.rebuild_tol = parse_double("rebuild.tol", map.take_or("rebuild.tol", "0.1"));
  std::string mass = map.take_or("solver.mass", "lumped");
  if (mass == "lumped") {
    c.use_lumped_mass = true;
  } else if (mass == "consistent") {
    c.use_lumped_mass = false;
  } else {
    throw Error(ErrorCode::Config, "key 'solver.mass': expected lumped or consistent");
  }
  c.output_dir = map.take_or("output.dir", "out");
  c.cadence = parse_long("output.cadence", map.take_or("output.cadence", "1"));
  c.write_snapshots = parse_bool("output.snapshots", map.take_or("output.snapshots", "true"));
  c.seed = parse_long("seed", map.take_or("seed", "0"));
  map.finish();
  c.validate();
  return c;
}

std::string serialize_config(const SimConfig& c) {
  std::ostringstream os;
  serialize_domain(os, c.domain, "domain.");
  serialize_domain(os, c.region, "region.");
  os << "rho0 = " << format_double(c.rho0) << "\n";
  os << "kappa = " << format_double(c.kappa) << "\n";
  os << "spacing = " << format_double(c.spacing) << "\n";
  switch (c.field.kind) {
    case AdvectionField::Kind::Zero:
      os << "advection.kind = zero\n";
      break;
    case AdvectionField::Kind::RigidRotation:
      os << "advection.kind = rigid_rotation\n";
      os << "advection.axis_point = " << format_vec3(c.field.axis_point) << "\n";
      os << "advection.axis = " << format_vec3(c.field.axis) << "\n";
      os << "advection.omega = " << format_double(c.field.omega) << "\n";
      break;
    case AdvectionField::Kind::Named:
      os << "advection.kind = named\n";
      os << "advection.name = " << c.field.name << "\n";
      os << "advection.center = " << format_vec3(c.field.center) << "\n";
      os << "advection.rate = " << format_double(c.field.rate) << "\n";
      break;
  }
  os << "lme.gamma = " << format_double(c.lme.gamma) << "\n";
  os << "lme.eps_cut = " << format_double(c.lme.eps_cut) << "\n";
  os << "lme.newton_tol = " << format_double(c.lme.newton_tol) << "\n";
  os << "lme.max_newton_iters = " << c.lme.max_newton_iters << "\n";
  os << "time.end = " << format_double(c.end_time) << "\n";
  os << "time.dt_safety = " << format_double(c.dt_safety) << "\n";
  os << "time.dt_cap = " << format_double(c.dt_cap) << "\n";
  os << "time.max_steps = " << c.max_steps << "\n";
  os << "rebuild.tol = " << format_double(c.rebuild_tol) << "\n";
  os << "solver.mass = " << (c.use_lumped_mass ? "lumped" : "consistent") << "\n";
  os << "output.dir = " << c.output_dir << "\n";
  os << "output.cadence = " << c.cadence << "\n";
  os << "output.snapshots = " << (c.write_snapshots ? "true" : "false") << "\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

} // namespace otm
