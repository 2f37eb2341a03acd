#include "mrddi/estimator.hpp"

#include "mrddi/errors.hpp"
#include "mrddi/parallel.hpp"
#include "mrddi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace mrddi {

namespace {

Error invalid(const std::string& msg) { return Error("estimator", "InvalidArgument", msg); }

std::size_t model_position(std::span<const PropensityModelSpec> models, const std::string& label) {
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (models[j].label == label) return j;
  }
  throw invalid("IPTW model '" + label + "' is not in the model set");
}

void record_failure(EstimatorOutcome& out, std::exception_ptr error) {
  out.estimate.reset();
  out.error = error;
  try {
    std::rethrow_exception(error);
  } catch (const Error& e) {
    out.error_kind = e.kind();
    out.error_module = e.module();
    out.error_message = e.what();
  } catch (const std::exception& e) {
    out.error_kind = "InternalError";
    out.error_module = "estimator";
    out.error_message = e.what();
  }
}

}  // namespace

std::string to_string(LinkFunction link) { return link == LinkFunction::identity ? "identity" : "log"; }

double weighted_arm_mean(const Dataset& d, const WeightSet& w) {
  double sum = 0.0;
  for (std::size_t r = 0; r < w.rows.size(); ++r) sum += w.weights(static_cast<Index>(r)) * d.outcome(w.rows[r]);
  return sum;
}

double ddi_point_estimate(const std::array<double, 4>& m, LinkFunction link) {
  const double m11 = m[arm_index({1, 1})];
  const double m01 = m[arm_index({0, 1})];
  const double m10 = m[arm_index({1, 0})];
  const double m00 = m[arm_index({0, 0})];
  if (link == LinkFunction::identity) return (m11 - m01) - (m10 - m00);
  for (double v : m) {
    if (!(v > 0.0)) throw DomainError("estimator", "log link needs positive arm means, got " + std::to_string(v));
  }
  return (std::log(m11) - std::log(m01)) - (std::log(m10) - std::log(m00));
}

void check_plan(const EstimationPlan& plan) {
  if (plan.models.empty()) throw invalid("at least one propensity model is required");
  for (std::size_t j = 0; j < plan.models.size(); ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      if (plan.models[j].label == plan.models[k].label) throw invalid("duplicate model label '" + plan.models[j].label + "'");
    }
  }
  for (const auto& e : plan.estimators) {
    if (e.method == WeightMethod::iptw) model_position(plan.models, e.iptw_model);
    if (e.method == WeightMethod::melcb && e.balance_covariates.empty()) {
      throw invalid("mELCB estimator '" + e.name + "' needs balance covariates");
    }
  }
}

std::array<WeightSet, 4> compute_arm_weights(const Dataset& d, std::span<const FittedPropensity> fits,
                                             const ArmPartition& part, const EstimatorSpec& spec,
                                             std::span<const PropensityModelSpec> models, const DualOptions& dual) {
  std::array<WeightSet, 4> out;
  for (Arm arm : kArms) {
    auto& w = out[arm_index(arm)];
    switch (spec.method) {
      case WeightMethod::iptw: w = iptw_weights(fits[model_position(models, spec.iptw_model)], part, arm); break;
      case WeightMethod::el: w = el_weights(fits, d, part, arm, dual); break;
      case WeightMethod::melcb: w = melcb_weights(fits, d, part, arm, spec.balance_covariates, dual); break;
    }
  }
  return out;
}

std::vector<EstimatorOutcome> evaluate_plan(const Dataset& d, const EstimationPlan& plan) {
  check_plan(plan);
  std::vector<EstimatorOutcome> out(plan.estimators.size());

  ArmPartition part;
  try {
    part = arm_partition(d);
  } catch (...) {
    for (auto& o : out) record_failure(o, std::current_exception());
    return out;
  }

  std::vector<FittedPropensity> fits(plan.models.size());
  std::vector<std::exception_ptr> fit_errors(plan.models.size());
  for (std::size_t j = 0; j < plan.models.size(); ++j) {
    try {
      fits[j] = fit_propensity(d, plan.models[j], plan.fit);
    } catch (...) {
      fit_errors[j] = std::current_exception();
    }
  }

  for (std::size_t e = 0; e < plan.estimators.size(); ++e) {
    const auto& spec = plan.estimators[e];
    std::exception_ptr blocked;
    if (spec.method == WeightMethod::iptw) {
      blocked = fit_errors[model_position(plan.models, spec.iptw_model)];
    } else {
      for (const auto& err : fit_errors) {
        if (err) {
          blocked = err;
          break;
        }
      }
    }
    if (blocked) {
      record_failure(out[e], blocked);
      continue;
    }
    try {
      const auto weights = compute_arm_weights(d, fits, part, spec, plan.models, plan.dual);
      DdiEstimate est;
      est.link = plan.link;
      for (std::size_t k = 0; k < 4; ++k) {
        est.arm_means[k] = weighted_arm_mean(d, weights[k]);
        if (weights[k].degenerate) {
          est.warnings.push_back("DegenerateWeights: arm " + arm_label(kArms[k]) + " has " +
                                 std::to_string(weights[k].clipped) + " clipped probabilities");
        }
      }
      est.theta = ddi_point_estimate(est.arm_means, plan.link);
      out[e].estimate = std::move(est);
      if (plan.keep_weights) out[e].weights = weights;
    } catch (...) {
      record_failure(out[e], std::current_exception());
    }
  }
  return out;
}

std::vector<EstimatorOutcome> bootstrap_plan(const Dataset& d, const EstimationPlan& plan, int R, std::uint64_t seed,
                                             int threads) {
  if (R < 0 || R == 1) throw invalid("bootstrap needs R = 0 (skip) or R >= 2, got " + std::to_string(R));
  auto full = evaluate_plan(d, plan);
  if (R == 0) return full;

  const std::size_t E = plan.estimators.size();
  const auto n = static_cast<std::uint64_t>(d.n());
  std::vector<double> thetas(static_cast<std::size_t>(R) * E, std::numeric_limits<double>::quiet_NaN());
  EstimationPlan replicate_plan = plan;
  replicate_plan.keep_weights = false;

  parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
    Rng rng(seed, r, Stage::bootstrap);
    std::vector<Index> rows(n);
    for (auto& row : rows) row = static_cast<Index>(rng.index(n));
    const auto replicate = evaluate_plan(take_rows(d, rows), replicate_plan);
    for (std::size_t e = 0; e < E; ++e) {
      if (replicate[e].estimate) thetas[r * E + e] = replicate[e].estimate->theta;
    }
  });

  for (std::size_t e = 0; e < E; ++e) {
    auto& outcome = full[e];
    if (!outcome.estimate) continue;
    auto& est = *outcome.estimate;

    // Fixed replicate order keeps the sums bit-reproducible.
    int ok = 0;
    double sum = 0.0;
    for (int r = 0; r < R; ++r) {
      const double t = thetas[static_cast<std::size_t>(r) * E + e];
      if (std::isnan(t)) continue;
      ++ok;
      sum += t;
    }
    est.replicates_total = R;
    est.replicates_failed = R - ok;
    if (static_cast<double>(est.replicates_failed) > kMaxFailedShare * R || ok < 2) {
      outcome.error_kind = "TooManyFailures";
      outcome.error_module = "estimator";
      outcome.error_message = std::to_string(est.replicates_failed) + " of " + std::to_string(R) +
                              " bootstrap replicates failed for '" + plan.estimators[e].name + "'";
      outcome.error = std::make_exception_ptr(TooManyFailures("estimator", outcome.error_message));
      continue;
    }
    const double mean = sum / ok;
    double ss = 0.0;
    for (int r = 0; r < R; ++r) {
      const double t = thetas[static_cast<std::size_t>(r) * E + e];
      if (!std::isnan(t)) ss += (t - mean) * (t - mean);
    }
    const double se = std::sqrt(ss / (ok - 1));
    est.se = se;
    est.ci_low = est.theta - kNormalQuantile975 * se;
    est.ci_high = est.theta + kNormalQuantile975 * se;
  }
  return full;
}

DdiEstimate bootstrap_inference(const Dataset& d, const EstimationPipeline& pipeline, int R, std::uint64_t seed,
                                int threads) {
  if (R < 2) throw invalid("bootstrap needs R >= 2, got " + std::to_string(R));
  auto out = bootstrap_plan(d, pipeline.as_plan(), R, seed, threads);
  if (out.front().error) std::rethrow_exception(out.front().error);
  return *out.front().estimate;
}

}  // namespace mrddi
