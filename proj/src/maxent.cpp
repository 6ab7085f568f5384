#include "otm/maxent.hpp"

#include <algorithm>
#include <sstream>

namespace otm {

LmeResult<3> evaluate_point(std::span<const Vec3> neighbor_positions, const Vec3& x,
                            double beta, const LmeParams& params) {
  return lme_solve<3>(neighbor_positions, x, beta, params);
}

namespace {

void audit_particle(std::size_t p, const Vec3& xp, double hp,
                    std::span<const NodeIndex> list, std::span<const double> N,
                    std::span<const Vec3> dN, const NodeSet& nodes) {
  double pou = 0.0;
  Vec3 first = Vec3::Zero();
  Vec3 grad0 = Vec3::Zero();
  Mat3 grad1 = Mat3::Zero();
  double nmin = 1.0, nmax = 0.0;
  for (std::size_t k = 0; k < list.size(); ++k) {
    pou += N[k];
    first += N[k] * nodes.x[list[k]];
    grad0 += dN[k];
    grad1 += nodes.x[list[k]] * dN[k].transpose();
    nmin = std::min(nmin, N[k]);
    nmax = std::max(nmax, N[k]);
  }
  auto fail = [&](const char* what, double value, double bound) {
    std::ostringstream os;
    os << "shape-table invariant violated at particle " << p << ": " << what
       << " = " << value << " exceeds " << bound;
    throw Error(ErrorCode::Invariant, os.str());
  };
  if (std::abs(pou - 1.0) > 1e-12) fail("|sum N - 1|", std::abs(pou - 1.0), 1e-12);
  if ((first - xp).norm() > 1e-10 * hp)
    fail("|sum x_a N_a - x_p|", (first - xp).norm(), 1e-10 * hp);
  if (grad0.norm() > 1e-8 / hp) fail("|sum grad N|", grad0.norm(), 1e-8 / hp);
  double dev = (grad1 - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-8) fail("|sum x_a grad N_a - I|", dev, 1e-8);
  if (nmin < 0.0 || nmax > 1.0) fail("shape value range", std::min(nmin, 1.0 - nmax), 0.0);
}

} // namespace

ShapeTable build_shape_table(const NodeSet& nodes, const MaterialPointSet& mps,
                             const NeighborTable& table, const LmeParams& params) {
  if (table.node_count != nodes.size() || table.particle_count != mps.size())
    throw Error(ErrorCode::Argument, "neighbor table does not match the given sets");
  params.validate();

  const std::size_t M = mps.size();
  ShapeTable shape;
  shape.node_count = nodes.size();
  shape.particle_count = M;
  shape.offsets.assign(M + 1, 0);
  shape.spacing = table.spacing;

  std::vector<Vec3> positions;
  std::vector<NodeIndex> keep;
  for (std::size_t p = 0; p < M; ++p) {
    const Vec3& xp = mps.x[p];
    const double hp = table.spacing[p];
    const double beta = params.gamma / (hp * hp);

    auto list = table.neighbors(p);
    keep.assign(list.begin(), list.end());
    LmeResult<3> res;
    try {
      Vec3 lambda = Vec3::Zero();
      // Truncation loop: prune entries below eps_cut and re-solve on the
      // smaller support (warm-started) until none remain below the cut, so
      // partition of unity and linear consistency stay exact on the pruned
      // support rather than being smeared by renormalization alone.
      for (int round = 0;; ++round) {
        positions.clear();
        for (NodeIndex a : keep) positions.push_back(nodes.x[a]);
        res = lme_solve<3>(std::span<const Vec3>(positions), xp, beta, params, lambda);
        if (round == 7) break;
        std::vector<NodeIndex> pruned;
        for (std::size_t k = 0; k < keep.size(); ++k)
          if (res.values[k] >= params.eps_cut) pruned.push_back(keep[k]);
        if (pruned.size() == keep.size()) break;
        if (pruned.size() < 4) break; // cutting further would starve the support
        keep.swap(pruned);
        lambda = res.lambda;
      }
    } catch (const Error& e) {
      std::ostringstream os;
      os << "particle " << p << ": " << e.what();
      ErrorCode code = e.code() == ErrorCode::Numerics ? ErrorCode::Resolution : e.code();
      throw Error(code, os.str());
    }

    shape.offsets[p + 1] = shape.offsets[p] + keep.size();
    shape.nodes.insert(shape.nodes.end(), keep.begin(), keep.end());
    shape.values.insert(shape.values.end(), res.values.begin(), res.values.end());
    shape.gradients.insert(shape.gradients.end(), res.gradients.begin(),
                           res.gradients.end());
    shape.newton_iters_total += res.iterations;
    shape.newton_iters_max = std::max(shape.newton_iters_max, res.iterations);

    audit_particle(p, xp, hp, shape.neighbors(p), shape.shape_values(p),
                   shape.shape_gradients(p), nodes);
  }
  return shape;
}

} // namespace otm
