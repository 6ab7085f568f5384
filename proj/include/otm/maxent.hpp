#pragma once

#include "otm/discretization.hpp"
#include "otm/error.hpp"
#include "otm/types.hpp"

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

namespace otm {

/// Parameters of the local max-entropy basis and of its dual Newton solve.
struct LmeParams {
  double gamma = 1.8;        // locality: beta_p = gamma / h_p^2
  double newton_tol = 1e-12; // residual tolerance, relative to local spacing
  int max_newton_iters = 50;
  double eps_cut = 1e-6;     // support truncation level

  void validate() const {
    if (!(gamma > 0.0)) throw Error(ErrorCode::Config, "lme gamma must be > 0");
    if (!(newton_tol > 0.0)) throw Error(ErrorCode::Config, "lme newton_tol must be > 0");
    if (!(eps_cut > 0.0 && eps_cut <= 1e-3))
      throw Error(ErrorCode::Config, "lme eps_cut must lie in (0, 1e-3]");
    if (max_newton_iters < 1)
      throw Error(ErrorCode::Config, "lme max_newton_iters must be >= 1");
  }
};

/// Sparse shape-function values and gradients at every material point.
struct ShapeTable {
  std::vector<std::size_t> offsets;  // particle_count + 1
  std::vector<NodeIndex> nodes;
  std::vector<double> values;
  std::vector<Vec3> gradients;
  std::vector<double> spacing; // h_p copied from the neighbor table
  std::size_t node_count = 0;
  std::size_t particle_count = 0;
  long newton_iters_total = 0;
  int newton_iters_max = 0;

  std::span<const NodeIndex> neighbors(std::size_t p) const {
    return {nodes.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
  std::span<const double> shape_values(std::size_t p) const {
    return {values.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
  std::span<const Vec3> shape_gradients(std::size_t p) const {
    return {gradients.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
};

template <int D>
struct LmeResult {
  std::vector<double> values;
  std::vector<Eigen::Matrix<double, D, 1>> gradients;
  Eigen::Matrix<double, D, 1> lambda;
  int iterations = 0;
  std::vector<double> residual_history; // |r| after each accepted iterate
};

/// Dual Newton solve of the local max-entropy program in D dimensions:
/// N_a = exp(-beta |x-x_a|^2 + lambda . (x-x_a)) / Z with lambda chosen so
/// that sum_a N_a (x_a - x) = 0. Gradients follow from the converged moment
/// matrix J = sum_a N_a (x_a-x)(x_a-x)^T as grad N_a = N_a J^-1 (x_a - x).
template <int D>
LmeResult<D> lme_solve(std::span<const Eigen::Matrix<double, D, 1>> node_positions,
                       const Eigen::Matrix<double, D, 1>& x, double beta,
                       const LmeParams& params,
                       const Eigen::Matrix<double, D, 1>& lambda0 =
                           Eigen::Matrix<double, D, 1>::Zero()) {
  using VecD = Eigen::Matrix<double, D, 1>;
  using MatD = Eigen::Matrix<double, D, D>;
  params.validate();
  const std::size_t n = node_positions.size();
  if (n < static_cast<std::size_t>(D) + 1)
    throw Error(ErrorCode::Argument, "lme_solve requires at least D+1 neighbors");
  if (!(beta > 0.0)) throw Error(ErrorCode::Argument, "lme_solve requires beta > 0");

  std::vector<VecD> z(n); // x_a - x
  for (std::size_t a = 0; a < n; ++a) z[a] = node_positions[a] - x;
  const double h = std::sqrt(params.gamma / beta); // local length scale

  LmeResult<D> out;
  out.values.resize(n);
  VecD lambda = lambda0;

  // Softmax-stable evaluation of N(lambda) and the consistency residual
  // r(lambda) = sum_a N_a z_a.
  auto evaluate = [&](const VecD& lam, std::vector<double>& N, VecD& r) {
    double emax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      double e = -beta * z[a].squaredNorm() - lam.dot(z[a]);
      N[a] = e;
      emax = std::max(emax, e);
    }
    double Z = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      N[a] = std::exp(N[a] - emax);
      Z += N[a];
    }
    r.setZero();
    for (std::size_t a = 0; a < n; ++a) {
      N[a] /= Z;
      r += N[a] * z[a];
    }
  };

  std::vector<double> trial(n);
  VecD r;
  evaluate(lambda, out.values, r);
  double rnorm = r.norm();
  out.residual_history.push_back(rnorm);
  const double tol = params.newton_tol * h;
  int it = 0;
  while (rnorm > tol) {
    if (++it > params.max_newton_iters) {
      std::ostringstream os;
      os << "LME Newton did not converge in " << params.max_newton_iters
         << " iterations (|r| = " << rnorm / h
         << " h): point outside the neighbor hull or degenerate neighborhood";
      throw Error(ErrorCode::Numerics, os.str());
    }
    MatD J = MatD::Zero();
    for (std::size_t a = 0; a < n; ++a) J += out.values[a] * (z[a] * z[a].transpose());
    J -= r * r.transpose();
    Eigen::SelfAdjointEigenSolver<MatD> es(J);
    double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(D - 1);
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
      J += 1e-14 * J.trace() * MatD::Identity();
    VecD step = J.ldlt().solve(r);
    // Damped update: halve while the residual does not decrease.
    double scale = 1.0;
    VecD lam_new;
    VecD r_new;
    double rnorm_new = rnorm;
    for (int halving = 0; halving <= 20; ++halving) {
      lam_new = lambda + scale * step;
      evaluate(lam_new, trial, r_new);
      rnorm_new = r_new.norm();
      if (rnorm_new < rnorm || rnorm_new <= tol) break;
      scale *= 0.5;
    }
    lambda = lam_new;
    out.values.swap(trial);
    r = r_new;
    rnorm = rnorm_new;
    out.residual_history.push_back(rnorm);
  }
  out.iterations = it;
  out.lambda = lambda;

  // Gradients from the converged state.
  MatD J = MatD::Zero();
  for (std::size_t a = 0; a < n; ++a) J += out.values[a] * (z[a] * z[a].transpose());
  Eigen::SelfAdjointEigenSolver<MatD> es(J);
  double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(D - 1);
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw Error(ErrorCode::Numerics,
                "singular LME moment matrix: coplanar or degenerate neighbors");
  MatD Jinv = J.inverse();
  out.gradients.resize(n);
  for (std::size_t a = 0; a < n; ++a) out.gradients[a] = out.values[a] * (Jinv * z[a]);
  return out;
}

/// 3-D evaluation at a single point. Throws Error(Numerics) when Newton does
/// not converge (point outside the neighbor hull) or the moment matrix is
/// singular (coplanar neighbors).
LmeResult<3> evaluate_point(std::span<const Vec3> neighbor_positions, const Vec3& x,
                            double beta, const LmeParams& params);

/// Shape functions and gradients for every particle over its neighbor list.
/// Entries below eps_cut are dropped and the solve is repeated on the pruned
/// support, so the consistency identities hold exactly on the final table.
/// Per-particle solver failures are rethrown as resolution errors naming the
/// particle; every table invariant is audited before returning.
ShapeTable build_shape_table(const NodeSet& nodes, const MaterialPointSet& mps,
                             const NeighborTable& table, const LmeParams& params);

} // namespace otm
