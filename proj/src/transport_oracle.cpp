#include "otm/transport_oracle.hpp"

#include "otm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace otm {

double DiscreteMeasure::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

DiscreteMeasure measure_of(const MaterialPointSet& mps) {
  return DiscreteMeasure{mps.x, mps.mass};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact linear assignment by shortest augmenting paths with potentials.
// Returns the column assigned to each row.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j)
        if (!used[j]) {
          double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct BasicArc {
  int i, j; // supplier, consumer
  double flow;
};

// Exact transportation simplex on the dense bipartite problem. Dantzig
// pricing with a Bland fallback after a degenerate stall; basis kept as a
// spanning tree with exactly n+m-1 arcs.
class TransportSimplex {
public:
  TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                   const std::vector<double>& cost)
      : n_(static_cast<int>(supply.size())), m_(static_cast<int>(demand.size())),
        cost_(cost) {
    northwest_corner(supply, demand);
    double scale = 0.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    tol_ = 1e-11 * std::max(scale, 1.0);
  }

  void solve() {
    const long max_pivots = 2000L * (n_ + m_) + 10000L;
    long stall = 0;
    double last_objective = objective();
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      compute_duals();
      int ei = -1, ej = -1;
      if (!pick_entering(stall > n_ + m_, ei, ej)) return; // optimal
      pivot_on(ei, ej);
      double obj = objective();
      stall = obj < last_objective - tol_ ? 0 : stall + 1;
      last_objective = obj;
    }
    throw Error(ErrorCode::Numerics, "transportation simplex exceeded its pivot budget");
  }

  double objective() const {
    double s = 0.0;
    for (const BasicArc& a : arcs_) s += a.flow * cost_[a.i * m_ + a.j];
    return s;
  }

  const std::vector<BasicArc>& basis() const { return arcs_; }

private:
  void northwest_corner(std::vector<double> supply, std::vector<double> demand) {
    int i = 0, j = 0;
    while (i < n_ && j < m_) {
      double f = std::min(supply[i], demand[j]);
      arcs_.push_back({i, j, f});
      supply[i] -= f;
      demand[j] -= f;
      bool row_done = supply[i] <= 0.0;
      bool col_done = demand[j] <= 0.0;
      if (row_done && col_done) {
        // Degenerate corner: leave a zero arc on one side unless finished.
        if (i + 1 < n_)
          ++i;
        else
          ++j;
      } else if (row_done) {
        ++i;
      } else {
        ++j;
      }
    }
    if (static_cast<int>(arcs_.size()) != n_ + m_ - 1)
      throw Error(ErrorCode::Numerics, "transportation basis is not a spanning tree");
  }

  // Node ids: suppliers [0, n), consumers [n, n+m).
  void compute_duals() {
    u_.assign(n_, kInf);
    v_.assign(m_, kInf);
    std::vector<std::vector<int>> at(n_ + m_);
    for (std::size_t k = 0; k < arcs_.size(); ++k) {
      at[arcs_[k].i].push_back(static_cast<int>(k));
      at[n_ + arcs_[k].j].push_back(static_cast<int>(k));
    }
    u_[0] = 0.0;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      for (int k : at[node]) {
        const BasicArc& a = arcs_[k];
        double c = cost_[a.i * m_ + a.j];
        if (node == a.i && v_[a.j] == kInf) {
          v_[a.j] = c - u_[a.i];
          q.push(n_ + a.j);
        } else if (node == n_ + a.j && u_[a.i] == kInf) {
          u_[a.i] = c - v_[a.j];
          q.push(a.i);
        }
      }
    }
    for (double x : u_)
      if (x == kInf)
        throw Error(ErrorCode::Numerics, "transportation basis became disconnected");
    for (double x : v_)
      if (x == kInf)
        throw Error(ErrorCode::Numerics, "transportation basis became disconnected");
  }

  bool pick_entering(bool bland, int& ei, int& ej) const {
    std::vector<char> basic(static_cast<std::size_t>(n_) * m_, 0);
    for (const BasicArc& a : arcs_) basic[a.i * m_ + a.j] = 1;
    double best = -tol_;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) {
        if (basic[i * m_ + j]) continue;
        double rc = cost_[i * m_ + j] - u_[i] - v_[j];
        if (bland) {
          if (rc < -tol_) {
            ei = i;
            ej = j;
            return true;
          }
        } else if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
        }
      }
    return ei >= 0;
  }

  void pivot_on(int ei, int ej) {
    // Unique tree path from consumer ej back to supplier ei.
    std::vector<std::vector<int>> at(n_ + m_);
    for (std::size_t k = 0; k < arcs_.size(); ++k) {
      at[arcs_[k].i].push_back(static_cast<int>(k));
      at[n_ + arcs_[k].j].push_back(static_cast<int>(k));
    }
    std::vector<int> parent_arc(n_ + m_, -1), parent(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    std::queue<int> q;
    q.push(ei);
    seen[ei] = 1;
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      if (node == n_ + ej) break;
      for (int k : at[node]) {
        int other = node == arcs_[k].i ? n_ + arcs_[k].j : arcs_[k].i;
        if (!seen[other]) {
          seen[other] = 1;
          parent[other] = node;
          parent_arc[other] = k;
          q.push(other);
        }
      }
    }
    if (!seen[n_ + ej])
      throw Error(ErrorCode::Numerics, "transportation basis became disconnected");

    // Walking ej -> ei, path arcs alternate -theta, +theta, ... starting
    // with -theta (the entering arc feeds consumer ej).
    std::vector<int> path;
    for (int node = n_ + ej; node != ei; node = parent[node])
      path.push_back(parent_arc[node]);
    double theta = kInf;
    int leaving = -1;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const BasicArc& a = arcs_[path[s]];
      if (a.flow < theta || (a.flow == theta && path[s] < leaving)) {
        theta = a.flow;
        leaving = path[s];
      }
    }
    for (std::size_t s = 0; s < path.size(); ++s)
      arcs_[path[s]].flow += (s % 2 == 0) ? -theta : theta;
    arcs_[leaving] = {ei, ej, theta};
  }

  int n_, m_;
  const std::vector<double>& cost_;
  double tol_ = 0.0;
  std::vector<BasicArc> arcs_;
  std::vector<double> u_, v_;
};

void validate_measure(const DiscreteMeasure& mu, const char* which) {
  if (mu.size() == 0)
    throw Error(ErrorCode::Argument, std::string("measure ") + which + " is empty");
  if (mu.points.size() != mu.weights.size())
    throw Error(ErrorCode::Argument, std::string("measure ") + which +
                                         " has mismatched points and weights");
  for (double w : mu.weights)
    if (!(w > 0.0))
      throw Error(ErrorCode::Argument,
                  std::string("measure ") + which + " has a nonpositive weight");
}

bool uniform_weights(const DiscreteMeasure& mu, double& w) {
  double lo = kInf, hi = -kInf;
  for (double x : mu.weights) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  w = 0.5 * (lo + hi);
  return hi - lo <= 1e-12 * hi;
}

void audit_plan(const TransportPlan& plan, const DiscreteMeasure& mu,
                const DiscreteMeasure& nu) {
  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  for (const PlanEntry& e : plan.entries) {
    if (e.mass < 0.0)
      throw Error(ErrorCode::Invariant, "transport plan has a negative entry");
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (std::abs(row[i] - mu.weights[i]) > 1e-10 * mu.weights[i])
      throw Error(ErrorCode::Invariant, "transport plan violates a source marginal");
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (std::abs(col[j] - nu.weights[j]) > 1e-10 * nu.weights[j])
      throw Error(ErrorCode::Invariant, "transport plan violates a target marginal");
}

} // namespace

WassersteinResult wasserstein2(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               std::size_t support_cap, WassersteinMethod method) {
  validate_measure(mu, "mu");
  validate_measure(nu, "nu");
  if (mu.size() > support_cap || nu.size() > support_cap) {
    std::ostringstream os;
    os << "support size exceeds the oracle cap of " << support_cap
       << " points; subsample first";
    throw Error(ErrorCode::Argument, os.str());
  }
  double ta = mu.total(), tb = nu.total();
  if (std::abs(ta - tb) > 1e-12 * std::max(ta, tb))
    throw Error(ErrorCode::Argument, "wasserstein2 requires equal total masses");

  const std::size_t n = mu.size(), m = nu.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      cost[i * m + j] = (mu.points[i] - nu.points[j]).squaredNorm();

  WassersteinResult out;
  double wa = 0.0, wb = 0.0;
  const bool assignable = n == m && uniform_weights(mu, wa) && uniform_weights(nu, wb) &&
                          std::abs(wa - wb) <= 1e-12 * std::max(wa, wb);
  if (method == WassersteinMethod::Assignment && !assignable)
    throw Error(ErrorCode::Argument,
                "assignment path requires equal-cardinality uniform weights");
  if (assignable && method != WassersteinMethod::Simplex) {
    auto match = solve_assignment(cost, static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double w = mu.weights[i];
      out.cost += w * cost[i * m + match[i]];
      out.plan.entries.push_back(
          {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(match[i]), w});
    }
  } else {
    TransportSimplex simplex(mu.weights, nu.weights, cost);
    simplex.solve();
    for (const BasicArc& a : simplex.basis())
      if (a.flow > 0.0) {
        out.cost += a.flow * cost[a.i * m + a.j];
        out.plan.entries.push_back({static_cast<std::uint32_t>(a.i),
                                    static_cast<std::uint32_t>(a.j), a.flow});
      }
  }
  audit_plan(out.plan, mu, nu);
  return out;
}

double entropy(const MaterialPointSet& mps) {
  double s = 0.0;
  for (std::size_t p = 0; p < mps.size(); ++p) {
    if (!(mps.volume[p] > 0.0)) {
      std::ostringstream os;
      os << "entropy undefined: particle " << p << " has nonpositive volume";
      throw Error(ErrorCode::Argument, os.str());
    }
    s += mps.mass[p] * std::log(mps.mass[p] / mps.volume[p]);
  }
  return s;
}

double jko_functional(const MaterialPointSet& before, const MaterialPointSet& after,
                      double dt, double kappa) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Argument, "jko_functional requires dt > 0");
  if (before.size() != after.size())
    throw Error(ErrorCode::Argument, "jko_functional requires equal particle counts");
  for (std::size_t p = 0; p < before.size(); ++p)
    if (std::abs(before.mass[p] - after.mass[p]) > 1e-12 * before.mass[p])
      throw Error(ErrorCode::Argument,
                  "jko_functional requires the same Dirac family (equal masses)");
  double dw2 = wasserstein2(measure_of(before), measure_of(after)).cost;
  return 0.5 * dw2 / dt + kappa * entropy(after);
}

double entropy_variation_check(const MaterialPointSet& mps,
                               const std::function<Vec3(const Vec3&)>& xi,
                               const std::function<Mat3(const Vec3&)>& grad_xi,
                               double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::Argument, "variation step h must be > 0");
  double s0 = entropy(mps);
  MaterialPointSet pushed = mps;
  double div_term = 0.0;
  for (std::size_t p = 0; p < mps.size(); ++p) {
    const Vec3& x = mps.x[p];
    pushed.x[p] = x + h * xi(x);
    Mat3 g = grad_xi(x);
    pushed.volume[p] = mps.volume[p] * (Mat3::Identity() + h * g).determinant();
    pushed.density[p] = pushed.mass[p] / pushed.volume[p];
    div_term += mps.mass[p] * g.trace();
  }
  double sh = entropy(pushed);
  return std::abs((sh - s0) / h + div_term);
}

} // namespace otm
