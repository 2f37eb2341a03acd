#pragma once

#include "mrddi/core.hpp"
#include "mrddi/dual.hpp"
#include "mrddi/propensity.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace mrddi {

enum class WeightMethod { iptw, el, melcb };

std::string to_string(WeightMethod method);

/// Normalized weights over the members of one arm, in ascending row order.
struct WeightSet {
  Arm arm;
  std::vector<Index> rows;
  Eigen::VectorXd weights;
  WeightMethod method = WeightMethod::iptw;
  std::vector<std::string> provenance;
  /// IPTW only: more than 5% of the arm hit the probability clip.
  bool degenerate = false;
  Index clipped = 0;
  /// EL/mELCB: max |sum_i w_i g_i| over retained constraint columns.
  double constraint_residual = 0.0;
  std::vector<std::string> dropped_columns;
};

/// Arm-restricted constraint rows g_i (one column per fitted model, then one
/// per balanced covariate) after collinearity filtering.
struct ConstraintMatrix {
  Arm arm;
  std::vector<Index> rows;
  Eigen::MatrixXd values;
  std::vector<std::string> column_labels;
  Eigen::VectorXd centers;
  std::vector<std::string> dropped_columns;
};

WeightSet uniform_weights(const ArmPartition& part, Arm arm);

/// Hajek-normalized inverse fitted probabilities (clipped probabilities).
WeightSet iptw_weights(const FittedPropensity& f, const ArmPartition& part, Arm arm);

/// n x J matrix with column j = e_arm^j(X_i) - mean_i e_arm^j(X_i) over all rows.
Eigen::MatrixXd centered_propensity_columns(std::span<const FittedPropensity> fits, Arm arm);

/// Columns are screened in specification order; a column is dropped when it
/// is numerically zero or when its component orthogonal to the columns kept
/// so far is below 1e-8 times the largest column norm. Throws
/// AllColumnsDropped when nothing survives.
ConstraintMatrix build_constraint_matrix(std::span<const FittedPropensity> fits, const Dataset& d,
                                         const ArmPartition& part, Arm arm,
                                         std::span<const std::string> balance_covariates = {});

DualSolution solve_dual(const ConstraintMatrix& G, const DualOptions& options = {});

/// Empirical-likelihood weights calibrated to every fitted model. Uniform
/// when every model column is degenerate.
WeightSet el_weights(std::span<const FittedPropensity> fits, const Dataset& d, const ArmPartition& part, Arm arm,
                     const DualOptions& options = {});

/// EL weights with exact mean balance of `balance_covariates` against the
/// pooled sample.
WeightSet melcb_weights(std::span<const FittedPropensity> fits, const Dataset& d, const ArmPartition& part, Arm arm,
                        std::span<const std::string> balance_covariates, const DualOptions& options = {});

}  // namespace mrddi
