#include "mrddi/diagnostics.hpp"

#include "mrddi/errors.hpp"
#include "mrddi/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mrddi {

namespace {

double weighted_mean(const Dataset& d, const WeightSet& w, Index col) {
  double sum = 0.0;
  for (std::size_t r = 0; r < w.rows.size(); ++r) sum += w.weights(static_cast<Index>(r)) * d.covariates(w.rows[r], col);
  return sum;
}

double arm_variance(const Dataset& d, const WeightSet& w, Index col) {
  const auto m = w.rows.size();
  if (m < 2) return 0.0;
  double mean = 0.0;
  for (Index row : w.rows) mean += d.covariates(row, col);
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (Index row : w.rows) ss += (d.covariates(row, col) - mean) * (d.covariates(row, col) - mean);
  return ss / static_cast<double>(m - 1);
}

}  // namespace

std::string pair_label(Arm p, Arm q) { return arm_label(p) + "v" + arm_label(q); }

PooledMoments pooled_moments(const Dataset& d, std::string_view covariate) {
  const auto x = d.covariate(covariate);
  PooledMoments out;
  out.mean = x.mean();
  if (x.size() > 1) out.sd = std::sqrt((x.array() - out.mean).square().sum() / static_cast<double>(x.size() - 1));
  return out;
}

double psb_arm_covariate(const Dataset& d, const WeightSet& w, std::string_view covariate) {
  const auto pooled = pooled_moments(d, covariate);
  if (!(pooled.sd > 0.0)) throw ConstantCovariate(std::string(covariate));
  return std::abs(weighted_mean(d, w, d.covariate_index(covariate)) - pooled.mean) / pooled.sd;
}

double psb_overall(const Dataset& d, std::span<const WeightSet, 4> weight_sets, std::string_view covariate) {
  double best = 0.0;
  for (const auto& w : weight_sets) best = std::max(best, psb_arm_covariate(d, w, covariate));
  return best;
}

std::array<double, 6> pairwise_smd(const Dataset& d, std::span<const WeightSet, 4> weight_sets,
                                   std::string_view covariate) {
  const Index col = d.covariate_index(covariate);
  std::array<double, 6> out{};
  for (std::size_t k = 0; k < kArmPairs.size(); ++k) {
    const auto& wp = weight_sets[arm_index(kArmPairs[k].first)];
    const auto& wq = weight_sets[arm_index(kArmPairs[k].second)];
    const double scale = std::sqrt(0.5 * (arm_variance(d, wp, col) + arm_variance(d, wq, col)));
    if (!(scale > 0.0)) throw ConstantCovariate(std::string(covariate));
    out[k] = std::abs(weighted_mean(d, wp, col) - weighted_mean(d, wq, col)) / scale;
  }
  return out;
}

int BalanceReport::count_overall_above_cutoff() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.flag_02; }));
}

int BalanceReport::count_pairwise_above_cutoff() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.flag_01_pairwise; }));
}

BalanceReport balance_report(const Dataset& d, std::span<const WeightSet, 4> weight_sets, std::string method,
                             std::span<const std::string> covariates) {
  BalanceReport report;
  report.method = std::move(method);
  const std::span<const std::string> names = covariates.empty() ? std::span<const std::string>(d.covariate_names)
                                                                 : covariates;
  for (const auto& name : names) {
    CovariateBalance row;
    row.covariate = name;
    try {
      for (std::size_t k = 0; k < 4; ++k) row.psb_by_arm[k] = psb_arm_covariate(d, weight_sets[k], name);
      row.pairwise_smd = pairwise_smd(d, weight_sets, name);
    } catch (const ConstantCovariate&) {
      report.skipped.push_back(name);
      continue;
    }
    row.psb_overall = *std::max_element(row.psb_by_arm.begin(), row.psb_by_arm.end());
    row.flag_02 = row.psb_overall > kOverallCutoff;
    row.flag_01_pairwise =
        std::any_of(row.pairwise_smd.begin(), row.pairwise_smd.end(), [](double v) { return v > kPairwiseCutoff; });
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::array<WeightSet, 4> unweighted_sets(const ArmPartition& part) {
  std::array<WeightSet, 4> out;
  for (Arm arm : kArms) out[arm_index(arm)] = uniform_weights(part, arm);
  return out;
}

std::string balance_csv(std::span<const BalanceReport> reports) {
  std::ostringstream os;
  os << "method,covariate,psb_overall";
  for (Arm arm : kArms) os << ",psb_" << arm_label(arm);
  for (const auto& [p, q] : kArmPairs) os << ",smd_" << pair_label(p, q);
  os << ",above_0.2,pairwise_above_0.1\n";
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      os << csv_field(rep.method) << ',' << csv_field(row.covariate) << ',' << format_number(row.psb_overall);
      for (double v : row.psb_by_arm) os << ',' << format_number(v);
      for (double v : row.pairwise_smd) os << ',' << format_number(v);
      os << ',' << (row.flag_02 ? 1 : 0) << ',' << (row.flag_01_pairwise ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

std::string balance_json(std::span<const BalanceReport> reports) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& rep : reports) {
    nlohmann::ordered_json r;
    r["method"] = rep.method;
    r["count_overall_above_0.2"] = rep.count_overall_above_cutoff();
    r["count_pairwise_above_0.1"] = rep.count_pairwise_above_cutoff();
    r["skipped"] = rep.skipped;
    auto& covs = r["covariates"] = nlohmann::ordered_json::array();
    for (const auto& row : rep.rows) {
      nlohmann::ordered_json c;
      c["covariate"] = row.covariate;
      c["psb_overall"] = row.psb_overall;
      auto& by_arm = c["psb_by_arm"] = nlohmann::ordered_json::object();
      for (Arm arm : kArms) by_arm[arm_label(arm)] = row.psb_by_arm[arm_index(arm)];
      auto& smd = c["pairwise_smd"] = nlohmann::ordered_json::object();
      for (std::size_t k = 0; k < kArmPairs.size(); ++k) {
        smd[pair_label(kArmPairs[k].first, kArmPairs[k].second)] = row.pairwise_smd[k];
      }
      c["flag_overall_above_0.2"] = row.flag_02;
      c["flag_pairwise_above_0.1"] = row.flag_01_pairwise;
      covs.push_back(std::move(c));
    }
    out.push_back(std::move(r));
  }
  return out.dump(2);
}

}  // namespace mrddi
