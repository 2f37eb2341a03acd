#pragma once

#include "mrddi/core.hpp"
#include "mrddi/formula.hpp"
#include "mrddi/multinomial.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrddi {

enum class ModelFamily { multinomial, factored_binary };

/// One candidate propensity model. An intercept is always included.
struct PropensityModelSpec {
  std::string label;
  std::vector<FormulaTerm> terms;
  ModelFamily family = ModelFamily::multinomial;
};

PropensityModelSpec make_model_spec(std::string label, std::string_view formula, std::span<const std::string> names,
                                    ModelFamily family = ModelFamily::multinomial);

struct FitOptions {
  NewtonSettings newton;
  /// Baseline level of the multinomial parametrization. Changing it only
  /// relabels coefficients; fitted probabilities are unaffected.
  Arm reference{0, 0};
};

/// Fitted probabilities below this (or above 1 minus this) are clipped before
/// they are used as weights.
inline constexpr double kProbabilityClip = 1e-12;

struct FittedPropensity {
  PropensityModelSpec spec;
  Arm reference{0, 0};
  /// Multinomial: one vector per non-reference arm in canonical order.
  /// Factored: {A ~ X, B ~ X + A}.
  std::vector<Eigen::VectorXd> coefficients;
  /// Inverse information of the stacked coefficient vector.
  Eigen::MatrixXd covariance;
  /// n x 4, columns in canonical arm order; unclipped.
  Eigen::MatrixXd probs;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
  int iterations = 0;
  /// Entries of `probs` outside [kProbabilityClip, 1 - kProbabilityClip].
  Index clipped = 0;

  Eigen::VectorXd stacked_coefficients() const;
};

FittedPropensity fit_multinomial_logistic(const Dataset& d, const PropensityModelSpec& spec,
                                          const FitOptions& options = {});

/// P(A=a|X) * P(B=b|A=a,X) from two binary logistic fits.
FittedPropensity fit_factored_binary(const Dataset& d, const PropensityModelSpec& spec,
                                     const FitOptions& options = {});

/// Dispatches on spec.family.
FittedPropensity fit_propensity(const Dataset& d, const PropensityModelSpec& spec, const FitOptions& options = {});

/// Clipped fitted probability of `arm` for every row.
Eigen::VectorXd predict_arm_probabilities(const FittedPropensity& f, Arm arm);

}  // namespace mrddi
