#pragma once

// Reference-coded multinomial logit: likelihood pieces and a Newton-Raphson
// fitter with step halving. Categories are 0..C-1; coefficient column k
// belongs to the k-th non-reference category in ascending order.

#include "mrddi/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace mrddi {

struct NewtonSettings {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  int max_halvings = 30;
  double ridge = 1e-6;
  // A score below tolerance while the Newton step is still this large means
  // the likelihood keeps climbing toward a boundary: separated data.
  double separation_step = 1e-3;
};

template <typename Scalar>
struct MultinomialFitResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> coefficients;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> information;
  Scalar log_likelihood = 0;
  std::vector<Scalar> trace;
  int iterations = 0;
  bool converged = false;
};

constexpr int non_reference_category(int k, int reference) { return k < reference ? k : k + 1; }

constexpr int non_reference_column(int category, int reference) {
  return category < reference ? category : category - 1;
}

/// Fills `probs` (n x C) and returns the log-likelihood of `y` under `beta`.
template <typename DerivedX, typename DerivedB>
typename DerivedX::Scalar multinomial_evaluate(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedB>& beta, std::span<const int> y,
    int reference, Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic>& probs) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = X.rows();
  const int free = static_cast<int>(beta.cols());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eta = X * beta;
  probs.resize(n, free + 1);

  Scalar loglik = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar top = std::max<Scalar>(0, eta.row(i).maxCoeff());
    const Scalar base = std::exp(-top);
    Scalar denom = base;
    for (int k = 0; k < free; ++k) {
      const Scalar e = std::exp(eta(i, k) - top);
      probs(i, non_reference_category(k, reference)) = e;
      denom += e;
    }
    probs(i, reference) = base;
    probs.row(i) /= denom;
    if (!y.empty()) {
      const int c = y[static_cast<std::size_t>(i)];
      const Scalar linear = c == reference ? Scalar(0) : eta(i, non_reference_column(c, reference));
      loglik += linear - (top + std::log(denom));
    }
  }
  return loglik;
}

/// Probability matrix (n x C) implied by `beta`.
template <typename DerivedX, typename DerivedB>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> multinomial_probabilities(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedB>& beta, int reference) {
  Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> probs;
  multinomial_evaluate(X, beta, std::span<const int>{}, reference, probs);
  return probs;
}

/// Stacked score vector [X'(Y_k - P_k)]_k over non-reference categories.
template <typename DerivedX, typename DerivedP>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> multinomial_score(const Eigen::MatrixBase<DerivedX>& X,
                                                                              const Eigen::MatrixBase<DerivedP>& probs,
                                                                              std::span<const int> y, int reference) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index c = X.cols();
  const int free = static_cast<int>(probs.cols()) - 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> score(c * free);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> residual(X.rows());
  for (int k = 0; k < free; ++k) {
    const int category = non_reference_category(k, reference);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      residual(i) = (y[static_cast<std::size_t>(i)] == category ? Scalar(1) : Scalar(0)) - probs(i, category);
    }
    score.segment(k * c, c).noalias() = X.transpose() * residual;
  }
  return score;
}

/// Observed (= expected) information: blocks X' diag(P_k (delta_kl - P_l)) X.
template <typename DerivedX, typename DerivedP>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> multinomial_information(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedP>& probs, int reference) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index c = X.cols();
  const int free = static_cast<int>(probs.cols()) - 1;
  Matrix info(c * free, c * free);
  Matrix weighted(X.rows(), c);
  for (int k = 0; k < free; ++k) {
    const auto pk = probs.col(non_reference_category(k, reference)).array();
    for (int l = k; l < free; ++l) {
      const auto pl = probs.col(non_reference_category(l, reference)).array();
      if (k == l) {
        weighted = X.array().colwise() * (pk * (1 - pk));
      } else {
        weighted = X.array().colwise() * (-pk * pl);
      }
      info.block(k * c, l * c, c, c).noalias() = X.transpose() * weighted;
      if (l != k) info.block(l * c, k * c, c, c) = info.block(k * c, l * c, c, c).transpose();
    }
  }
  return info;
}

namespace detail {

template <typename Matrix, typename Vector>
bool newton_direction(const Matrix& info, const Vector& score, double ridge, Vector& step) {
  Eigen::LLT<Matrix> llt(info);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
    step = llt.solve(score);
    return true;
  }
  Matrix damped = info;
  damped.diagonal().array() += ridge;
  llt.compute(damped);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15)) return false;
  step = llt.solve(score);
  return true;
}

}  // namespace detail

/// Maximizes the multinomial log-likelihood from beta = 0. Throws
/// SeparationError or NonConvergence.
template <typename DerivedX>
MultinomialFitResult<typename DerivedX::Scalar> fit_multinomial_newton(const Eigen::MatrixBase<DerivedX>& X,
                                                                       std::span<const int> y, int categories,
                                                                       int reference,
                                                                       const NewtonSettings& settings = {}) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index c = X.cols();
  const int free = categories - 1;

  MultinomialFitResult<Scalar> fit;
  fit.coefficients = Matrix::Zero(c, free);
  Matrix probs;
  Scalar loglik = multinomial_evaluate(X, fit.coefficients, y, reference, probs);
  fit.trace.push_back(loglik);

  Vector score;
  Vector step;
  Matrix candidate;
  Matrix candidate_probs;
  for (int iter = 0;; ++iter) {
    score = multinomial_score(X, probs, y, reference);
    if (score.cwiseAbs().maxCoeff() < settings.score_tolerance) {
      fit.converged = true;
      break;
    }
    if (iter >= settings.max_iterations) break;

    const Matrix info = multinomial_information(X, probs, reference);
    if (!detail::newton_direction(info, score, settings.ridge, step)) {
      throw SeparationError("information matrix is singular even with ridge " + std::to_string(settings.ridge));
    }

    Scalar t = 1;
    bool accepted = false;
    for (int h = 0; h <= settings.max_halvings; ++h, t /= 2) {
      candidate = fit.coefficients + t * step.reshaped(c, free);
      const Scalar cand_ll = multinomial_evaluate(X, candidate, y, reference, candidate_probs);
      if (std::isfinite(cand_ll) && cand_ll >= loglik - 1e-12 * (1 + std::abs(loglik))) {
        fit.coefficients.swap(candidate);
        probs.swap(candidate_probs);
        loglik = cand_ll;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    fit.trace.push_back(loglik);
    fit.iterations = iter + 1;
  }

  fit.log_likelihood = loglik;
  fit.information = multinomial_information(X, probs, reference);
  if (!fit.converged) {
    throw NonConvergence("multinomial Newton did not reach score tolerance in " +
                         std::to_string(settings.max_iterations) + " iterations (max |score| = " +
                         std::to_string(score.cwiseAbs().maxCoeff()) + ")");
  }
  if (detail::newton_direction(fit.information, score, settings.ridge, step)) {
    if (step.cwiseAbs().maxCoeff() > settings.separation_step) {
      throw SeparationError("likelihood is still increasing toward a boundary (separated data)");
    }
  } else {
    throw SeparationError("information matrix is singular at the fitted coefficients");
  }
  return fit;
}

}  // namespace mrddi
