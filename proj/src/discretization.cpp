#include "otm/discretization.hpp"

#include "otm/error.hpp"
#include "otm/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace otm {

double MaterialPointSet::total_mass() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

double MaterialPointSet::total_volume() const {
  double s = 0.0;
  for (double v : volume) s += v;
  return s;
}

namespace {

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 e;
  e.col(0) = b - a;
  e.col(1) = c - a;
  e.col(2) = d - a;
  return std::abs(e.determinant()) / 6.0;
}

// Axis-aligned bounding box of a (bounded) region.
void region_bbox(const Domain& r, Vec3& lo, Vec3& hi) {
  switch (r.kind) {
    case DomainKind::Sphere:
      lo = r.center - Vec3::Constant(r.radius);
      hi = r.center + Vec3::Constant(r.radius);
      return;
    case DomainKind::Cylinder: {
      double reach = r.half_length + r.radius;
      lo = r.center - Vec3::Constant(reach);
      hi = r.center + Vec3::Constant(reach);
      return;
    }
    case DomainKind::Annulus: {
      double reach = r.half_height + r.outer_radius;
      lo = r.center - Vec3::Constant(reach);
      hi = r.center + Vec3::Constant(reach);
      return;
    }
    case DomainKind::HalfSpace:
      throw Error(ErrorCode::Config, "initial region must be bounded");
  }
}

// Five-tetrahedron split of the unit cube, parity-mirrored so that faces of
// adjacent cubes match. Offsets are relative to the cube's low corner.
using TetCorners = std::array<std::array<int, 3>, 4>;
const std::array<TetCorners, 5> kTetsEven = {{
    {{{0, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}}},
    {{{1, 0, 0}, {0, 0, 0}, {1, 1, 0}, {1, 0, 1}}},
    {{{0, 1, 0}, {0, 0, 0}, {1, 1, 0}, {0, 1, 1}}},
    {{{0, 0, 1}, {0, 0, 0}, {1, 0, 1}, {0, 1, 1}}},
    {{{1, 1, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}}},
}};
const std::array<TetCorners, 5> kTetsOdd = {{
    {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}}},
    {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}},
    {{{1, 1, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}}},
    {{{1, 0, 1}, {1, 0, 0}, {0, 0, 1}, {1, 1, 1}}},
    {{{0, 1, 1}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}}},
}};

std::int64_t cell_key(int ix, int iy, int iz) {
  auto wrap = [](int v) { return static_cast<std::int64_t>(v) & 0x1FFFFF; };
  return (wrap(ix) << 42) | (wrap(iy) << 21) | wrap(iz);
}

// Uniform grid hash over points; cell size fixed at construction.
class PointGrid {
public:
  PointGrid(const std::vector<Vec3>& points, double cell)
      : points_(points), cell_(cell) {
    cells_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      cells_[key_of(points[i])].push_back(static_cast<NodeIndex>(i));
  }

  double cell_size() const { return cell_; }

  int coord(double x) const { return static_cast<int>(std::floor(x / cell_)); }

  std::int64_t key_of(const Vec3& p) const {
    return cell_key(coord(p.x()), coord(p.y()), coord(p.z()));
  }

  template <class Fn>
  void for_cell(int ix, int iy, int iz, Fn&& fn) const {
    auto it = cells_.find(cell_key(ix, iy, iz));
    if (it == cells_.end()) return;
    for (NodeIndex i : it->second) fn(i, points_[i]);
  }

  // Visits all points in cells within Chebyshev ring `ring` of p's cell.
  template <class Fn>
  void for_ring(const Vec3& p, int ring, Fn&& fn) const {
    int cx = coord(p.x()), cy = coord(p.y()), cz = coord(p.z());
    for (int dx = -ring; dx <= ring; ++dx)
      for (int dy = -ring; dy <= ring; ++dy)
        for (int dz = -ring; dz <= ring; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          for_cell(cx + dx, cy + dy, cz + dz, fn);
        }
  }

private:
  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<NodeIndex>> cells_;
};

// Mean distance to the 4 nearest nodes: the local spacing h_p that scales
// the thermalization parameter beta_p.
double local_spacing(const PointGrid& grid, const Vec3& q, std::size_t node_count) {
  std::array<double, 4> best;
  best.fill(std::numeric_limits<double>::infinity());
  auto offer = [&](NodeIndex, const Vec3& xa) {
    double d2 = (xa - q).squaredNorm();
    if (d2 < best[3]) {
      best[3] = d2;
      std::sort(best.begin(), best.end());
    }
  };
  const int max_ring = 1 << 20;
  for (int ring = 0; ring <= max_ring; ++ring) {
    grid.for_ring(q, ring, offer);
    // Cells beyond this ring hold points at distance >= (ring-1)*cell.
    double safe = (ring - 1) * grid.cell_size();
    if (std::isfinite(best[3]) && safe > 0.0 && best[3] <= safe * safe) break;
  }
  double h = 0.0;
  for (double d2 : best) {
    if (!std::isfinite(d2))
      throw Error(ErrorCode::Resolution, "fewer than 4 nodes available for spacing estimate");
    h += std::sqrt(d2);
  }
  h /= 4.0;
  if (!(h > 0.0) || node_count < 4)
    throw Error(ErrorCode::Resolution, "degenerate node set: zero local spacing");
  return h;
}

void check_not_coplanar(const NodeSet& nodes, std::span<const NodeIndex> list,
                        const Vec3& xp, double h, std::size_t p) {
  Mat3 cov = Mat3::Zero();
  for (NodeIndex a : list) {
    Vec3 z = (nodes.x[a] - xp) / h;
    cov += z * z.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  if (es.eigenvalues()(0) <= 1e-12 * es.eigenvalues()(2)) {
    std::ostringstream os;
    os << "particle " << p << " has coplanar neighbor nodes: "
       << "under-resolved discretization";
    throw Error(ErrorCode::Resolution, os.str());
  }
}

} // namespace

SeedResult seed_from_tets(const std::vector<Vec3>& vertices,
                          const std::vector<std::array<int, 4>>& tets, double rho0) {
  if (!(rho0 > 0.0))
    throw Error(ErrorCode::Config, "rho0 must be strictly positive");
  if (vertices.size() < 4 || tets.empty())
    throw Error(ErrorCode::Resolution,
                "seeding requires at least 4 nodes and one tetrahedron");
  SeedResult out;
  out.nodes.x = vertices;
  out.nodes.frozen.assign(vertices.size(), 0);
  out.nodes.pinned.assign(vertices.size(), 0);
  out.mps.x.reserve(tets.size());
  for (const auto& t : tets) {
    for (int vi : t)
      if (vi < 0 || static_cast<std::size_t>(vi) >= vertices.size())
        throw Error(ErrorCode::Argument, "tetrahedron vertex index out of range");
    const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]],
               &d = vertices[t[3]];
    double v = tet_volume(a, b, c, d);
    if (!(v > 0.0))
      throw Error(ErrorCode::Argument, "degenerate (zero-volume) seed tetrahedron");
    out.mps.x.push_back((a + b + c + d) / 4.0);
    out.mps.volume.push_back(v);
    out.mps.mass.push_back(rho0 * v);
    out.mps.density.push_back(rho0);
  }
  return out;
}

SeedResult seed(const Domain& domain, const Domain& initial_region,
                double target_spacing, double rho0) {
  domain.validate();
  initial_region.validate();
  if (!(target_spacing > 0.0))
    throw Error(ErrorCode::Config, "target_spacing must be strictly positive");
  if (!(target_spacing < feature_radius(domain)))
    throw Error(ErrorCode::Resolution,
                "target_spacing must resolve the domain feature radius");

  const double h = target_spacing;
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  region_bbox(initial_region, lo, hi);
  const Vec3 c = initial_region.center;

  // Lattice vertices sit at c + h*(i+1/2, j+1/2, k+1/2): the half-cell offset
  // keeps the region center and boundary off lattice planes.
  auto vertex = [&](int i, int j, int k) {
    return Vec3(c.x() + h * (i + 0.5), c.y() + h * (j + 0.5), c.z() + h * (k + 0.5));
  };
  auto lattice_lo = [&](double v, double cc) { return static_cast<int>(std::floor((v - cc) / h - 1.5)); };
  auto lattice_hi = [&](double v, double cc) { return static_cast<int>(std::ceil((v - cc) / h + 0.5)); };
  const int i0 = lattice_lo(lo.x(), c.x()), i1 = lattice_hi(hi.x(), c.x());
  const int j0 = lattice_lo(lo.y(), c.y()), j1 = lattice_hi(hi.y(), c.y());
  const int k0 = lattice_lo(lo.z(), c.z()), k1 = lattice_hi(hi.z(), c.z());

  std::unordered_map<std::int64_t, int> vertex_index;
  std::vector<Vec3> verts;
  std::vector<std::array<int, 4>> tets;
  std::unordered_map<std::int64_t, bool> inside_cache;
  auto inside = [&](int i, int j, int k) {
    std::int64_t key = cell_key(i, j, k);
    auto it = inside_cache.find(key);
    if (it != inside_cache.end()) return it->second;
    bool in = contains(initial_region, vertex(i, j, k));
    inside_cache.emplace(key, in);
    return in;
  };
  auto vert_id = [&](int i, int j, int k) {
    std::int64_t key = cell_key(i, j, k);
    auto it = vertex_index.find(key);
    if (it != vertex_index.end()) return it->second;
    int id = static_cast<int>(verts.size());
    verts.push_back(vertex(i, j, k));
    vertex_index.emplace(key, id);
    return id;
  };

  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j)
      for (int k = k0; k <= k1; ++k) {
        const auto& split = ((i + j + k) % 2 + 2) % 2 == 0 ? kTetsEven : kTetsOdd;
        for (const TetCorners& tc : split) {
          bool keep = true;
          for (const auto& off : tc)
            if (!inside(i + off[0], j + off[1], k + off[2])) { keep = false; break; }
          if (!keep) continue;
          std::array<int, 4> tet;
          for (int v = 0; v < 4; ++v)
            tet[v] = vert_id(i + tc[v][0], j + tc[v][1], k + tc[v][2]);
          tets.push_back(tet);
        }
      }

  if (verts.size() < 4 || tets.empty())
    throw Error(ErrorCode::Resolution,
                "target_spacing too coarse: seeding produced fewer than 4 nodes");

  SeedResult out = seed_from_tets(verts, tets, rho0);
  for (std::size_t a = 0; a < out.nodes.size(); ++a)
    if (!contains(domain, out.nodes.x[a]))
      throw Error(ErrorCode::Config, "initial region is not contained in the domain");
  return out;
}

NeighborTable build_neighbors(const NodeSet& nodes, const MaterialPointSet& mps,
                              const LmeParams& lme) {
  if (nodes.size() == 0 || mps.size() == 0)
    throw Error(ErrorCode::Argument, "build_neighbors requires nonempty node and particle sets");
  if (nodes.size() < 4)
    throw Error(ErrorCode::Resolution, "at least 4 nodes are required in 3-D");

  const std::size_t M = mps.size();
  NeighborTable table;
  table.node_count = nodes.size();
  table.particle_count = M;
  table.offsets.assign(M + 1, 0);
  table.cutoff.resize(M);
  table.gauge.resize(M);
  table.spacing.resize(M);

  // Pass 1: local spacing and cutoff radius per particle.
  Vec3 lo = nodes.x[0], hi = nodes.x[0];
  for (const Vec3& p : nodes.x) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double vol = std::max((hi - lo).prod(), 0.0);
  double cell = vol > 0.0 ? std::cbrt(vol / static_cast<double>(nodes.size()))
                          : std::max((hi - lo).maxCoeff(), 1.0);
  if (!(cell > 0.0)) cell = 1.0;
  PointGrid knn_grid(nodes.x, cell);
  const double support = std::sqrt(std::log(1.0 / lme.eps_cut) / lme.gamma);
  double max_cutoff = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    double hp = local_spacing(knn_grid, mps.x[p], nodes.size());
    table.spacing[p] = hp;
    table.cutoff[p] = hp * support;
    max_cutoff = std::max(max_cutoff, table.cutoff[p]);
  }

  // Pass 2: ball queries on a grid whose cell matches the largest cutoff.
  PointGrid grid(nodes.x, max_cutoff);
  std::vector<NodeIndex> scratch;
  for (std::size_t p = 0; p < M; ++p) {
    scratch.clear();
    const Vec3& q = mps.x[p];
    const double r = table.cutoff[p];
    const double r2 = r * r;
    double far2 = 0.0;
    int cx = grid.coord(q.x()), cy = grid.coord(q.y()), cz = grid.coord(q.z());
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz)
          grid.for_cell(cx + dx, cy + dy, cz + dz, [&](NodeIndex a, const Vec3& xa) {
            double d2 = (xa - q).squaredNorm();
            if (d2 <= r2) { // closed-ball convention
              scratch.push_back(a);
              far2 = std::max(far2, d2);
            }
          });
    if (scratch.size() < 4) {
      std::ostringstream os;
      os << "particle " << p << " has " << scratch.size()
         << " neighbor nodes (need >= 4): under-resolved discretization";
      throw Error(ErrorCode::Resolution, os.str());
    }
    std::sort(scratch.begin(), scratch.end());
    table.offsets[p + 1] = table.offsets[p] + scratch.size();
    table.nodes.insert(table.nodes.end(), scratch.begin(), scratch.end());
    table.gauge[p] = std::sqrt(far2);
    check_not_coplanar(nodes, table.neighbors(p), q, table.spacing[p], p);
  }
  return table;
}

bool needs_rebuild(const NeighborTable& table, const NodeSet& nodes,
                   const MaterialPointSet& mps, double tol) {
  if (table.node_count != nodes.size() || table.particle_count != mps.size())
    throw Error(ErrorCode::Argument, "neighbor table does not match the given sets");
  for (std::size_t p = 0; p < table.particle_count; ++p) {
    const Vec3& q = mps.x[p];
    // Tiny relative slack so rigid motions evaluated in floating point do
    // not tip exact-cutoff neighbors over the edge.
    const double r2 = table.cutoff[p] * table.cutoff[p] * (1.0 + 1e-9);
    double far2 = 0.0;
    for (NodeIndex a : table.neighbors(p)) {
      double d2 = (nodes.x[a] - q).squaredNorm();
      if (d2 > r2) return true; // a retained neighbor left the support ball
      far2 = std::max(far2, d2);
    }
    double far = std::sqrt(far2);
    if (std::abs(far - table.gauge[p]) > tol * table.gauge[p]) return true;
  }
  return false;
}

double min_shared_node_spacing(const NodeSet& nodes, const NeighborTable& table) {
  if (table.node_count != nodes.size())
    throw Error(ErrorCode::Argument, "neighbor table does not match the node set");
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < table.particle_count; ++p) {
    auto list = table.neighbors(p);
    for (std::size_t i = 0; i < list.size(); ++i)
      for (std::size_t j = i + 1; j < list.size(); ++j)
        best2 = std::min(best2, (nodes.x[list[i]] - nodes.x[list[j]]).squaredNorm());
  }
  return std::sqrt(best2);
}

} // namespace otm
