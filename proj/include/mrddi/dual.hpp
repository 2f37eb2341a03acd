#pragma once

// Convex dual of the empirical-likelihood weighting problem:
//
//   minimize  F(rho) = -(1/m) sum_i log(1 + rho' g_i)
//   over      { rho : 1 + rho' g_i > 0 for all i }
//
// The minimizer satisfies sum_i g_i / (1 + rho' g_i) = 0 and yields the
// weights w_i proportional to 1 / (1 + rho' g_i).

#include "mrddi/errors.hpp"

#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mrddi {

struct DualOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;  // on max |sum_i g_i / (1 + rho' g_i)|
  double margin = 1e-10;    // iterates keep 1 + rho' g_i >= margin
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 80;
};

template <typename Scalar>
struct DualSolutionT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rho;
  bool converged = false;
  Scalar grad_norm = 0;
  int iterations = 0;
  std::vector<Scalar> objective_trace;
  std::vector<std::string> dropped_columns;
};

using DualSolution = DualSolutionT<double>;

/// F(rho); +inf outside the margin-feasible region.
template <typename DerivedG, typename DerivedR>
typename DerivedG::Scalar dual_objective(const Eigen::MatrixBase<DerivedG>& g, const Eigen::MatrixBase<DerivedR>& rho,
                                         double margin = 0.0) {
  using Scalar = typename DerivedG::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> denom = (g * rho).array() + Scalar(1);
  if (!(denom.minCoeff() > margin)) return std::numeric_limits<Scalar>::infinity();
  return -denom.array().log().sum() / static_cast<Scalar>(g.rows());
}

/// sum_i g_i / (1 + rho' g_i).
template <typename DerivedG, typename DerivedR>
Eigen::Matrix<typename DerivedG::Scalar, Eigen::Dynamic, 1> dual_residual(const Eigen::MatrixBase<DerivedG>& g,
                                                                          const Eigen::MatrixBase<DerivedR>& rho) {
  const auto inv = ((g * rho).array() + 1).inverse().matrix().eval();
  return g.transpose() * inv;
}

/// Damped Newton from rho = 0 with backtracking that keeps every iterate
/// strictly feasible. Throws DualNonConvergence.
template <typename DerivedG>
DualSolutionT<typename DerivedG::Scalar> solve_dual(const Eigen::MatrixBase<DerivedG>& g,
                                                    const DualOptions& options = {}) {
  using Scalar = typename DerivedG::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = g.rows();
  const Eigen::Index k = g.cols();
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);

  DualSolutionT<Scalar> sol;
  sol.rho = Vector::Zero(k);
  if (k == 0) {
    sol.converged = true;
    return sol;
  }

  Scalar objective = 0;  // F(0)
  sol.objective_trace.push_back(objective);
  Vector denom = Vector::Ones(m);
  Matrix scaled(m, k);
  Vector candidate(k);

  for (int iter = 0;; ++iter) {
    const Vector inv = denom.cwiseInverse();
    const Vector residual = g.transpose() * inv;
    sol.grad_norm = residual.cwiseAbs().maxCoeff();
    if (sol.grad_norm < options.tolerance) {
      // Every finite stationary point has sum_i 1/(1 + rho' g_i) = m. When no
      // positive weights satisfy the constraints, F is unbounded below and the
      // iterates run off to infinity, where the residual also vanishes.
      if (std::abs(inv.sum() * inv_m - Scalar(1)) > Scalar(1e-6)) {
        throw DualNonConvergence("no positive weights satisfy the constraints (dual objective is unbounded below)");
      }
      sol.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    // With S = diag(1/denom) g the gradient is -(1/m) S'1 and the Hessian
    // (1/m) S'S, so the Newton step is the least-squares solution of S d = 1.
    // Solving it by QR avoids squaring the condition number of nearly
    // collinear model columns.
    scaled = g.array().colwise() * inv.array();
    const Vector gradient = -inv_m * residual;
    Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
    Vector direction = qr.solve(Vector::Ones(m));
    if (!direction.allFinite()) direction = -gradient;
    const Scalar slope = gradient.dot(direction);

    // Once the predicted decrease is below rounding noise in F, the Armijo
    // test stops discriminating (tiny steps "pass" with F unchanged), so steps
    // are judged by the stationarity residual instead.
    const Scalar noise = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(objective));
    Scalar t = 1;
    bool accepted = false;
    for (int b = 0; b < options.max_backtracks && !accepted; ++b, t *= options.shrink) {
      candidate = sol.rho + t * direction;
      const Vector cand_denom = (g * candidate).array() + Scalar(1);
      if (!(cand_denom.minCoeff() >= options.margin)) continue;
      const Scalar cand_obj = -cand_denom.array().log().sum() * inv_m;
      const Scalar predicted = -options.armijo * t * slope;
      if (predicted > noise) {
        accepted = cand_obj <= objective - predicted;
      } else {
        const Vector cand_residual = g.transpose() * cand_denom.cwiseInverse();
        accepted = cand_residual.cwiseAbs().maxCoeff() < sol.grad_norm;
      }
      if (accepted) {
        sol.rho = candidate;
        denom = cand_denom;
        objective = cand_obj;
      }
    }
    if (!accepted) break;
    sol.objective_trace.push_back(objective);
    sol.iterations = iter + 1;
  }

  if (!sol.converged) {
    throw DualNonConvergence("empirical-likelihood dual stopped after " + std::to_string(sol.iterations) +
                             " iterations with residual " + std::to_string(sol.grad_norm));
  }
  return sol;
}

}  // namespace mrddi
