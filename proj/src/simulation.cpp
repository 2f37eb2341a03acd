#include "mrddi/simulation.hpp"

#include "mrddi/diagnostics.hpp"
#include "mrddi/errors.hpp"
#include "mrddi/parallel.hpp"

#include <cmath>
#include <limits>

namespace mrddi {

namespace {

Error invalid(const std::string& msg) { return Error("simulation", "InvalidArgument", msg); }

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }

void fill_covariate_row(Rng& rng, double* row) {
  row[0] = rng.bernoulli(0.2) ? 1.0 : 0.0;
  row[1] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  row[2] = rng.normal();
  row[3] = rng.uniform(-0.5, 0.5);
  row[4] = rng.exponential(1.0);
}

std::array<double, 3> odds_of(const double* x) {
  const double e4 = std::exp(x[3]);
  const double e5 = std::exp(x[4]);
  const double block = x[0] * x[2] + x[1] * e4;
  return {
      std::exp(0.7 + 0.4 * x[0] + 0.2 * x[1] - 0.2 * x[2] - 0.4 * e4 - 0.4 * e5 + 0.2 * block),
      std::exp(0.6 + 0.2 * x[0] + 0.6 * x[1] - 0.4 * x[2] - 0.6 * e4 - 0.2 * e5 + 0.2 * block),
      std::exp(0.5 + 0.6 * x[0] + 0.4 * x[1] - 0.2 * x[2] - 0.2 * e4 - 0.2 * e5 + 0.4 * block),
  };
}

double outcome_probability_of(const double* x, int a, int b, double xi) {
  const double risk = x[0] + x[1] - x[2] + std::exp(x[3]) - std::exp(x[4]) + x[0] * x[2] + x[1] * std::exp(x[3]);
  const double lp = 0.5 - 0.1 * a - 0.2 * b - xi * a * b + 0.4 * risk * (0.5 + xi * (0.2 * a + 0.1 * b + a * b));
  return expit(lp);
}

std::array<double, 5> row_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != 5) throw invalid("covariate rows must have 5 entries");
  return {x(0), x(1), x(2), x(3), x(4)};
}

}  // namespace

std::string to_string(Dgp dgp) { return dgp == Dgp::logistic ? "logistic" : "latent"; }

Dgp parse_dgp(std::string_view text) {
  if (text == "logistic" || text == "A") return Dgp::logistic;
  if (text == "latent" || text == "B") return Dgp::latent;
  throw invalid("unknown data-generating process '" + std::string(text) + "'");
}

const std::vector<std::string>& simulation_covariate_names() {
  static const std::vector<std::string> names{"X1", "X2", "X3", "X4", "X5"};
  return names;
}

Eigen::MatrixXd gen_covariates(Index n, Rng& rng) {
  Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor> X(n, 5);
  for (Index i = 0; i < n; ++i) fill_covariate_row(rng, X.row(i).data());
  return X;
}

std::array<double, 3> treatment_odds(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto r = row_of(x);
  return odds_of(r.data());
}

Eigen::MatrixXd treatment_probabilities(const Eigen::MatrixXd& X, double gamma0) {
  const double scale = std::exp(gamma0);
  Eigen::MatrixXd P(X.rows(), 4);
  for (Index i = 0; i < X.rows(); ++i) {
    const auto q = treatment_odds(X.row(i));
    const double q11 = scale * q[0];
    const double q01 = scale * q[1];
    const double q10 = scale * q[2];
    const double total = 1.0 + q11 + q01 + q10;
    P(i, arm_index({1, 1})) = q11 / total;
    P(i, arm_index({0, 1})) = q01 / total;
    P(i, arm_index({1, 0})) = q10 / total;
    P(i, arm_index({0, 0})) = 1.0 / total;
  }
  return P;
}

TreatmentDraw gen_treatment_mnl(const Eigen::MatrixXd& X, double gamma0, Rng& rng) {
  const Eigen::MatrixXd P = treatment_probabilities(X, gamma0);
  TreatmentDraw out;
  out.a.resize(X.rows());
  out.b.resize(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    Arm chosen = kArms.back();
    for (Arm arm : kArms) {
      acc += P(i, static_cast<Index>(arm_index(arm)));
      if (u < acc) {
        chosen = arm;
        break;
      }
    }
    out.a(i) = chosen.a;
    out.b(i) = chosen.b;
  }
  return out;
}

TreatmentDraw gen_treatment_latent(const Eigen::MatrixXd& X, double c, Rng& rng) {
  TreatmentDraw out;
  out.a.resize(X.rows());
  out.b.resize(X.rows());
  out.z1.resize(X.rows());
  out.z2.resize(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const auto q = treatment_odds(X.row(i));
    const double z0 = rng.normal();
    out.z1(i) = q[2] + z0;
    out.z2(i) = q[1] - z0;
    out.a(i) = out.z1(i) >= c ? 1 : 0;
    out.b(i) = out.z2(i) >= c ? 1 : 0;
  }
  return out;
}

double outcome_probability(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a, int b, double xi) {
  const auto r = row_of(x);
  return outcome_probability_of(r.data(), a, b, xi);
}

Eigen::VectorXd gen_outcome(const Eigen::MatrixXd& X, const Eigen::VectorXi& A, const Eigen::VectorXi& B, double xi,
                            Rng& rng) {
  if (A.size() != X.rows() || B.size() != X.rows()) throw invalid("treatment and covariate lengths differ");
  Eigen::VectorXd Y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    Y(i) = rng.bernoulli(outcome_probability(X.row(i), A(i), B(i), xi)) ? 1.0 : 0.0;
  }
  return Y;
}

PrevalenceCurve::PrevalenceCurve(Dgp dgp, Index mc_size, std::uint64_t seed) : dgp_(dgp) {
  Rng rng(seed, 0, Stage::calibration);
  first_.resize(static_cast<std::size_t>(mc_size));
  if (dgp == Dgp::latent) second_.resize(static_cast<std::size_t>(mc_size));
  double row[5];
  for (std::size_t i = 0; i < first_.size(); ++i) {
    fill_covariate_row(rng, row);
    const auto q = odds_of(row);
    if (dgp == Dgp::logistic) {
      first_[i] = q[0] + q[1] + q[2];
    } else {
      first_[i] = q[2];
      second_[i] = q[1];
    }
  }
}

double PrevalenceCurve::operator()(double parameter) const {
  double sum = 0.0;
  if (dgp_ == Dgp::logistic) {
    const double scale = std::exp(parameter);
    for (double q : first_) sum += 1.0 / (1.0 + scale * q);
  } else {
    // P(Z1 < c, Z2 < c | X) = P(Q_01 - c < Z0 < c - Q_10).
    for (std::size_t i = 0; i < first_.size(); ++i) {
      sum += std::max(0.0, normal_cdf(parameter - first_[i]) - normal_cdf(second_[i] - parameter));
    }
  }
  return sum / static_cast<double>(first_.size());
}

DgpCalibration calibrate_prevalence(Dgp dgp, double target, Index mc_size, std::uint64_t seed) {
  if (!(target > 0.0 && target < 1.0)) throw invalid("target prevalence must lie in (0, 1)");
  if (mc_size < 1) throw invalid("calibration sample size must be positive");
  const PrevalenceCurve curve(dgp, mc_size, seed);

  // Prevalence falls with gamma0 and rises with c; orient so f(lo) < target < f(hi).
  double lo = dgp == Dgp::logistic ? 15.0 : -30.0;
  double hi = dgp == Dgp::logistic ? -15.0 : 30.0;
  const double f_lo = curve(lo);
  const double f_hi = curve(hi);
  if (!(f_lo < target && target < f_hi)) {
    throw BracketError("prevalence " + std::to_string(target) + " is outside [" + std::to_string(f_lo) + ", " +
                       std::to_string(f_hi) + "] over the search interval");
  }
  for (int iter = 0; iter < 200 && std::abs(hi - lo) > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (curve(mid) < target ? lo : hi) = mid;
  }

  DgpCalibration out;
  out.dgp = dgp;
  out.target = target;
  out.parameter = 0.5 * (lo + hi);
  out.achieved_prevalence = curve(out.parameter);
  out.mc_size = mc_size;
  if (std::abs(out.achieved_prevalence - target) >= 0.002) {
    throw BracketError("calibration stalled at prevalence " + std::to_string(out.achieved_prevalence));
  }
  return out;
}

std::array<double, 4> oracle_arm_means(double xi, Index mc_size, std::uint64_t seed) {
  if (mc_size < 1) throw invalid("oracle sample size must be positive");
  Rng rng(seed, 0, Stage::oracle);
  // Chunked sums keep the rounding error of 1e7-term accumulations negligible.
  constexpr Index kChunk = 65536;
  std::array<double, 4> total{};
  double row[5];
  for (Index start = 0; start < mc_size; start += kChunk) {
    std::array<double, 4> chunk{};
    const Index stop = std::min(mc_size, start + kChunk);
    for (Index i = start; i < stop; ++i) {
      fill_covariate_row(rng, row);
      for (Arm arm : kArms) chunk[arm_index(arm)] += outcome_probability_of(row, arm.a, arm.b, xi);
    }
    for (std::size_t k = 0; k < 4; ++k) total[k] += chunk[k];
  }
  for (double& v : total) v /= static_cast<double>(mc_size);
  return total;
}

double oracle_true_ddi(double xi, Index mc_size, std::uint64_t seed) {
  return ddi_point_estimate(oracle_arm_means(xi, mc_size, seed), LinkFunction::identity);
}

std::vector<PropensityModelSpec> models_with_truth() {
  const auto& names = simulation_covariate_names();
  return {
      make_model_spec("x1x2", "X1 + X2", names),
      make_model_spec("main", "X1 + X2 + X3 + X4 + X5", names),
      make_model_spec("x1x3x4", "X1 + X3 + X4", names),
      make_model_spec("true", "X1 + X2 + X3 + exp(X4) + exp(X5) + X1:X3 + X2:exp(X4)", names),
  };
}

std::vector<PropensityModelSpec> models_all_wrong() {
  const auto& names = simulation_covariate_names();
  return {
      make_model_spec("x1", "X1", names),
      make_model_spec("x4x5", "X4 + X5", names),
      make_model_spec("x1x4", "X1 + X4", names),
      make_model_spec("x1_expx4_expx5", "X1 + exp(X4) + exp(X5)", names),
  };
}

void check_config(const SimulationConfig& cfg) {
  if (cfg.n < 4) throw invalid("n must be at least 4");
  if (cfg.runs < 1) throw invalid("runs must be at least 1");
  if (!(cfg.target_prevalence_00 > 0.0 && cfg.target_prevalence_00 < 1.0)) {
    throw invalid("target prevalence must lie in (0, 1)");
  }
  if (cfg.bootstrap_R < 0 || cfg.bootstrap_R == 1) throw invalid("bootstrap_R must be 0 or at least 2");
  if (cfg.model_set.empty()) throw invalid("the model set is empty");
  if (cfg.include_melcb && cfg.balance_covariates.empty()) throw invalid("mELCB needs balance covariates");
  if (!cfg.include_iptw && !cfg.include_el && !cfg.include_melcb) throw invalid("no estimator selected");
}

EstimationPlan study_plan(const SimulationConfig& cfg) {
  EstimationPlan plan;
  plan.models = cfg.model_set;
  if (cfg.include_iptw) {
    for (const auto& m : cfg.model_set) plan.estimators.push_back({"IPTW-" + m.label, WeightMethod::iptw, m.label, {}});
  }
  if (cfg.include_el) plan.estimators.push_back({"EL", WeightMethod::el, "", {}});
  if (cfg.include_melcb) plan.estimators.push_back({"mELCB", WeightMethod::melcb, "", cfg.balance_covariates});
  return plan;
}

Dataset simulate_dataset(const SimulationConfig& cfg, double parameter, std::uint64_t run) {
  Rng cov_rng(cfg.seed, run, Stage::covariates);
  Rng trt_rng(cfg.seed, run, Stage::treatment);
  Rng out_rng(cfg.seed, run, Stage::outcome);

  Dataset d;
  d.covariates = gen_covariates(cfg.n, cov_rng);
  d.covariate_names = simulation_covariate_names();
  auto trt = cfg.dgp == Dgp::logistic ? gen_treatment_mnl(d.covariates, parameter, trt_rng)
                                      : gen_treatment_latent(d.covariates, parameter, trt_rng);
  d.treat_a = std::move(trt.a);
  d.treat_b = std::move(trt.b);
  d.outcome = gen_outcome(d.covariates, d.treat_a, d.treat_b, cfg.xi, out_rng);
  return d;
}

const EstimatorSummary& StudyReport::summary(std::string_view name) const {
  for (const auto& s : estimators) {
    if (s.name == name) return s;
  }
  throw invalid("no estimator named '" + std::string(name) + "' in the study");
}

StudyReport run_study(const SimulationConfig& cfg, std::optional<DgpCalibration> calibration,
                      std::optional<double> oracle) {
  check_config(cfg);
  StudyReport report;
  report.config = cfg;
  report.calibration =
      calibration ? *calibration
                  : calibrate_prevalence(cfg.dgp, cfg.target_prevalence_00, cfg.calibration_mc_size, cfg.seed);
  report.oracle_true_ddi = oracle ? *oracle : oracle_true_ddi(cfg.xi, cfg.oracle_mc_size, cfg.seed);

  EstimationPlan plan = study_plan(cfg);
  plan.keep_weights = true;
  const std::size_t E = plan.estimators.size();
  const auto runs = static_cast<std::size_t>(cfg.runs);

  std::vector<std::vector<EstimatorOutcome>> outcomes(runs);
  std::vector<std::vector<BalanceRecord>> balance(runs);

  parallel_for(runs, cfg.threads, [&](std::size_t r) {
    const Dataset d = simulate_dataset(cfg, report.calibration.parameter, r);
    auto out = bootstrap_plan(d, plan, cfg.bootstrap_R, stream_key(cfg.seed, r, Stage::bootstrap), 1);

    auto record = [&](const std::string& method, std::span<const WeightSet, 4> sets) {
      for (const auto& name : d.covariate_names) {
        try {
          balance[r].push_back({static_cast<int>(r), method, name, psb_overall(d, sets, name)});
        } catch (const ConstantCovariate&) {
        }
      }
    };
    try {
      const auto base = unweighted_sets(arm_partition(d));
      record("unweighted", base);
    } catch (const EmptyArm&) {
    }
    for (std::size_t e = 0; e < E; ++e) {
      if (out[e].weights) record(plan.estimators[e].name, *out[e].weights);
      out[e].weights.reset();
    }
    outcomes[r] = std::move(out);
  });

  const double truth = report.oracle_true_ddi;
  report.thetas.assign(runs, std::vector<double>(E, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t e = 0; e < E; ++e) {
    EstimatorSummary s;
    s.name = plan.estimators[e].name;
    double bias_sum = 0.0;
    double theta_sum = 0.0;
    double se_sum = 0.0;
    int covered = 0;
    std::vector<double> ok_thetas;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto& o = outcomes[r][e];
      const bool usable = o.estimate && !o.error;
      if (!usable) {
        ++s.failures;
        if (s.first_failure.empty()) s.first_failure = o.error_kind + ": " + o.error_message;
        continue;
      }
      const auto& est = *o.estimate;
      report.thetas[r][e] = est.theta;
      ok_thetas.push_back(est.theta);
      bias_sum += (est.theta - truth) / truth;
      theta_sum += est.theta;
      if (est.se) {
        se_sum += *est.se;
        if (*est.ci_low <= truth && truth <= *est.ci_high) ++covered;
      }
    }
    s.runs_ok = static_cast<int>(ok_thetas.size());
    if (s.runs_ok > 0) {
      s.mean_relative_bias = bias_sum / s.runs_ok;
      s.coverage = cfg.bootstrap_R > 0 ? static_cast<double>(covered) / s.runs_ok
                                       : std::numeric_limits<double>::quiet_NaN();
      s.mean_bootstrap_se = cfg.bootstrap_R > 0 ? se_sum / s.runs_ok : std::numeric_limits<double>::quiet_NaN();
      const double mean = theta_sum / s.runs_ok;
      double ss = 0.0;
      for (double t : ok_thetas) ss += (t - mean) * (t - mean);
      s.empirical_se = s.runs_ok > 1 ? std::sqrt(ss / (s.runs_ok - 1)) : 0.0;
    }
    if (static_cast<double>(s.failures) > kMaxFailedShare * cfg.runs) {
      throw TooManyFailures("simulation", std::to_string(s.failures) + " of " + std::to_string(cfg.runs) +
                                              " runs failed for " + s.name + " (" + s.first_failure + ")");
    }
    report.estimators.push_back(std::move(s));
  }
  for (auto& b : balance) report.balance.insert(report.balance.end(), b.begin(), b.end());
  return report;
}

std::vector<StudyReport> run_grid(const SimulationConfig& base, const std::vector<double>& prevalences,
                                  const std::vector<double>& xis) {
  std::map<double, double> oracle_cache;
  std::vector<StudyReport> out;
  for (double prevalence : prevalences) {
    const auto calibration = calibrate_prevalence(base.dgp, prevalence, base.calibration_mc_size, base.seed);
    for (double xi : xis) {
      auto it = oracle_cache.find(xi);
      if (it == oracle_cache.end()) it = oracle_cache.emplace(xi, oracle_true_ddi(xi, base.oracle_mc_size, base.seed)).first;
      SimulationConfig cfg = base;
      cfg.target_prevalence_00 = prevalence;
      cfg.xi = xi;
      out.push_back(run_study(cfg, calibration, it->second));
    }
  }
  return out;
}

}  // namespace mrddi
