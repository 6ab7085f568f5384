#pragma once

#include "otm/discretization.hpp"
#include "otm/types.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace otm {

/// Weighted Dirac family used by the exact transport oracle.
struct DiscreteMeasure {
  std::vector<Vec3> points;
  std::vector<double> weights; // strictly positive

  std::size_t size() const { return points.size(); }
  double total() const;
};

DiscreteMeasure measure_of(const MaterialPointSet& mps);

struct PlanEntry {
  std::uint32_t i, j;
  double mass;
};

/// Sparse nonnegative coupling with prescribed marginals.
struct TransportPlan {
  std::vector<PlanEntry> entries;
};

struct WassersteinResult {
  double cost = 0.0; // squared 2-Wasserstein distance
  TransportPlan plan;
};

enum class WassersteinMethod {
  Auto,       // assignment when applicable, simplex otherwise
  Assignment, // requires equal-cardinality uniform weights
  Simplex,
};

/// Exact optimum of the discrete Kantorovich program with quadratic cost.
/// Equal-cardinality uniform-weight inputs are solved by optimal assignment,
/// everything else by an exact transportation-simplex linear program. This is
/// a desk-scale verification instrument: supports above the cap are refused.
WassersteinResult wasserstein2(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               std::size_t support_cap = 2000,
                               WassersteinMethod method = WassersteinMethod::Auto);

/// Discrete entropy sum_p m_p log(m_p / v_p) of the particle density the
/// solver maintains. Throws on nonpositive volumes.
double entropy(const MaterialPointSet& mps);

/// Incremental functional driving the diffusive step:
/// 0.5 d_W^2(before, after) / dt + kappa * entropy(after), with the exact
/// Wasserstein oracle on the two particle measures. Both states must carry
/// the same Dirac family (equal counts and masses).
double jko_functional(const MaterialPointSet& before, const MaterialPointSet& after,
                      double dt, double kappa);

/// First-variation identity check for the entropy: pushes particles through
/// x + h xi(x), updates volumes by det(I + h grad xi), and returns
/// |(S(h) - S(0)) / h + sum_p m_p div xi(x_p)|, which is O(h) for smooth xi.
double entropy_variation_check(const MaterialPointSet& mps,
                               const std::function<Vec3(const Vec3&)>& xi,
                               const std::function<Mat3(const Vec3&)>& grad_xi,
                               double h);

} // namespace otm
