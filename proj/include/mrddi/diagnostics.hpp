#pragma once

#include "mrddi/core.hpp"
#include "mrddi/weights.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrddi {

/// Arm pairs compared by pairwise_smd, in reporting order.
inline constexpr std::array<std::pair<Arm, Arm>, 6> kArmPairs{{
    {{1, 1}, {1, 0}},
    {{1, 1}, {0, 1}},
    {{1, 1}, {0, 0}},
    {{1, 0}, {0, 1}},
    {{1, 0}, {0, 0}},
    {{0, 1}, {0, 0}},
}};

/// "(1,1)v(1,0)" and so on.
std::string pair_label(Arm p, Arm q);

inline constexpr double kOverallCutoff = 0.2;
inline constexpr double kPairwiseCutoff = 0.1;

/// Unweighted mean and sample (n-1) standard deviation of a covariate over all rows.
struct PooledMoments {
  double mean = 0.0;
  double sd = 0.0;
};
PooledMoments pooled_moments(const Dataset& d, std::string_view covariate);

/// |weighted arm mean - pooled mean| / pooled sd. Throws ConstantCovariate.
double psb_arm_covariate(const Dataset& d, const WeightSet& w, std::string_view covariate);

/// Max of the four per-arm PSBs; `weight_sets` in canonical arm order.
double psb_overall(const Dataset& d, std::span<const WeightSet, 4> weight_sets, std::string_view covariate);

/// |weighted mean_p - weighted mean_q| / sqrt((var_p + var_q) / 2) with
/// unweighted within-arm sample variances, for each pair of kArmPairs.
/// Throws ConstantCovariate when both arms of a pair are constant.
std::array<double, 6> pairwise_smd(const Dataset& d, std::span<const WeightSet, 4> weight_sets,
                                   std::string_view covariate);

struct CovariateBalance {
  std::string covariate;
  std::array<double, 4> psb_by_arm{};
  double psb_overall = 0.0;
  std::array<double, 6> pairwise_smd{};
  bool flag_02 = false;
  bool flag_01_pairwise = false;
};

struct BalanceReport {
  std::string method;
  std::vector<CovariateBalance> rows;
  /// Covariates left out because a standard deviation was zero.
  std::vector<std::string> skipped;

  int count_overall_above_cutoff() const;
  int count_pairwise_above_cutoff() const;
};

/// Every covariate of `d` when `covariates` is empty.
BalanceReport balance_report(const Dataset& d, std::span<const WeightSet, 4> weight_sets, std::string method,
                             std::span<const std::string> covariates = {});

/// Uniform within-arm weights, the "before weighting" baseline.
std::array<WeightSet, 4> unweighted_sets(const ArmPartition& part);

/// One row per (method, covariate); fixed column order.
std::string balance_csv(std::span<const BalanceReport> reports);

std::string balance_json(std::span<const BalanceReport> reports);

}  // namespace mrddi
