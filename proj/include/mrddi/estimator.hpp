#pragma once

#include "mrddi/core.hpp"
#include "mrddi/dual.hpp"
#include "mrddi/propensity.hpp"
#include "mrddi/weights.hpp"

#include <array>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mrddi {

enum class LinkFunction { identity, log };

std::string to_string(LinkFunction link);

struct DdiEstimate {
  double theta = 0.0;
  LinkFunction link = LinkFunction::identity;
  /// Weighted E(Y_ab) in canonical arm order.
  std::array<double, 4> arm_means{};
  std::optional<double> se;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  int replicates_total = 0;
  int replicates_failed = 0;
  /// Non-fatal conditions, e.g. IPTW weights that leaned on clipped probabilities.
  std::vector<std::string> warnings;
};

/// sum over arm members of w_i * Y_i.
double weighted_arm_mean(const Dataset& d, const WeightSet& w);

/// [f(m11) - f(m01)] - [f(m10) - f(m00)], means in canonical arm order.
/// Throws DomainError for a non-positive mean under the log link.
double ddi_point_estimate(const std::array<double, 4>& arm_means, LinkFunction link);

/// One weighting recipe. IPTW uses the single model named `iptw_model`;
/// EL and mELCB calibrate to every model in the enclosing plan.
struct EstimatorSpec {
  std::string name;
  WeightMethod method = WeightMethod::el;
  std::string iptw_model;
  std::vector<std::string> balance_covariates;
};

/// Several estimators that share one set of propensity fits.
struct EstimationPlan {
  std::vector<PropensityModelSpec> models;
  std::vector<EstimatorSpec> estimators;
  LinkFunction link = LinkFunction::identity;
  FitOptions fit;
  DualOptions dual;
  /// Keep the full-data weight sets in each EstimatorOutcome.
  bool keep_weights = false;
};

/// The full recipe for a single estimator.
struct EstimationPipeline {
  std::vector<PropensityModelSpec> models;
  EstimatorSpec estimator;
  LinkFunction link = LinkFunction::identity;
  FitOptions fit;
  DualOptions dual;

  EstimationPlan as_plan() const { return {models, {estimator}, link, fit, dual}; }
};

/// Throws Error("estimator", "InvalidArgument") for inconsistent recipes:
/// unknown IPTW model, mELCB without balance covariates, no models.
void check_plan(const EstimationPlan& plan);

/// Weights for all four arms in canonical order. `fits` must be in plan model order.
std::array<WeightSet, 4> compute_arm_weights(const Dataset& d, std::span<const FittedPropensity> fits,
                                             const ArmPartition& part, const EstimatorSpec& spec,
                                             std::span<const PropensityModelSpec> models,
                                             const DualOptions& dual = {});

/// Point estimate or the error that prevented it.
struct EstimatorOutcome {
  std::optional<DdiEstimate> estimate;
  std::exception_ptr error;
  std::string error_kind;
  std::string error_module;
  std::string error_message;
  std::optional<std::array<WeightSet, 4>> weights;
};

/// Fits every model once and evaluates every estimator. A failure is
/// confined to the estimators that depend on the failing step.
std::vector<EstimatorOutcome> evaluate_plan(const Dataset& d, const EstimationPlan& plan);

/// Full-data estimates with bootstrap standard errors; one entry per plan
/// estimator. Replicate r resamples with Rng(seed, r, Stage::bootstrap) and
/// refits everything. An estimator with more than 10% failed replicates
/// keeps its point estimate, gets no interval, and is reported through
/// `error_kind == "TooManyFailures"`. `R == 0` skips the bootstrap.
std::vector<EstimatorOutcome> bootstrap_plan(const Dataset& d, const EstimationPlan& plan, int R, std::uint64_t seed,
                                             int threads = 1);

/// Single-estimator bootstrap. Throws whatever stops the full-data estimate
/// and TooManyFailures when more than 10% of replicates fail. Requires R >= 2.
DdiEstimate bootstrap_inference(const Dataset& d, const EstimationPipeline& pipeline, int R, std::uint64_t seed,
                                int threads = 1);

inline constexpr double kNormalQuantile975 = 1.96;
inline constexpr double kMaxFailedShare = 0.10;

}  // namespace mrddi
