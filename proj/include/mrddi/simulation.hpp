#pragma once

#include "mrddi/core.hpp"
#include "mrddi/estimator.hpp"
#include "mrddi/propensity.hpp"
#include "mrddi/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrddi {

/// Treatment mechanisms: multinomial-logistic truth, or the latent bivariate
/// threshold model that no multinomial logit reproduces.
enum class Dgp { logistic, latent };

std::string to_string(Dgp dgp);
/// Accepts "logistic"/"A" and "latent"/"B".
Dgp parse_dgp(std::string_view text);

/// Names of the five simulated covariates, "X1" to "X5".
const std::vector<std::string>& simulation_covariate_names();

/// n x 5: Bern(0.2), Bern(0.4), N(0,1), U(-0.5,0.5), Exp(1), drawn row by row.
Eigen::MatrixXd gen_covariates(Index n, Rng& rng);

/// Q_11, Q_01, Q_10 of the logistic treatment model at gamma0 = 0, in that
/// order. The arm odds against (0,0) are exp(gamma0) times these.
std::array<double, 3> treatment_odds(const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// n x 4 arm probabilities (canonical order) of the logistic treatment model.
Eigen::MatrixXd treatment_probabilities(const Eigen::MatrixXd& X, double gamma0);

struct TreatmentDraw {
  Eigen::VectorXi a;
  Eigen::VectorXi b;
  /// Latent model only.
  Eigen::VectorXd z1;
  Eigen::VectorXd z2;
};

TreatmentDraw gen_treatment_mnl(const Eigen::MatrixXd& X, double gamma0, Rng& rng);

/// Z0 ~ N(0,1), Z1 = Q_10 + Z0, Z2 = Q_01 - Z0 (odds at gamma0 = 0);
/// A = [Z1 >= c], B = [Z2 >= c].
TreatmentDraw gen_treatment_latent(const Eigen::MatrixXd& X, double c, Rng& rng);

/// P(Y = 1 | X, a, b) of the outcome model.
double outcome_probability(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a, int b, double xi);

Eigen::VectorXd gen_outcome(const Eigen::MatrixXd& X, const Eigen::VectorXi& A, const Eigen::VectorXi& B, double xi,
                            Rng& rng);

struct DgpCalibration {
  Dgp dgp = Dgp::logistic;
  double target = 0.0;
  /// gamma0 (logistic) or the threshold c (latent).
  double parameter = 0.0;
  double achieved_prevalence = 0.0;
  Index mc_size = 0;
};

/// Share of arm (0,0) as a function of the parameter, averaged over a fixed
/// covariate sample (common random numbers make it smooth and monotone).
class PrevalenceCurve {
 public:
  PrevalenceCurve(Dgp dgp, Index mc_size, std::uint64_t seed);
  double operator()(double parameter) const;
  Dgp dgp() const { return dgp_; }
  Index size() const { return static_cast<Index>(first_.size()); }

 private:
  Dgp dgp_;
  // logistic: Q_11 + Q_01 + Q_10; latent: Q_10 and Q_01.
  std::vector<double> first_;
  std::vector<double> second_;
};

/// Bisection over gamma0 in [-15, 15] or c in [-30, 30]; the (0,0) share is
/// evaluated exactly given each covariate draw. Throws BracketError when the
/// interval does not straddle the target.
DgpCalibration calibrate_prevalence(Dgp dgp, double target, Index mc_size, std::uint64_t seed);

/// E(Y_ab) for the four arms (canonical order), averaging outcome
/// probabilities over mc_size covariate draws.
std::array<double, 4> oracle_arm_means(double xi, Index mc_size, std::uint64_t seed);

/// Identity-link DDI of the outcome model under the covariate distribution.
double oracle_true_ddi(double xi, Index mc_size, std::uint64_t seed);

/// Candidate sets. `models_with_truth` ends with the correctly specified
/// logistic model; every model of `models_all_wrong` omits X2 and X3.
std::vector<PropensityModelSpec> models_with_truth();
std::vector<PropensityModelSpec> models_all_wrong();

struct SimulationConfig {
  Index n = 2000;
  double xi = 1.0;
  double target_prevalence_00 = 0.30;
  Dgp dgp = Dgp::logistic;
  int runs = 250;
  int bootstrap_R = 200;
  std::vector<PropensityModelSpec> model_set = models_with_truth();
  std::vector<std::string> balance_covariates{"X2", "X3"};
  std::uint64_t seed = 20240601;
  Index calibration_mc_size = 1'000'000;
  Index oracle_mc_size = 10'000'000;
  int threads = 1;
  bool include_iptw = true;
  bool include_el = true;
  bool include_melcb = true;
};

/// Throws Error("simulation", "InvalidArgument").
void check_config(const SimulationConfig& cfg);

/// IPTW-<label> for each model, then EL and mELCB as enabled.
EstimationPlan study_plan(const SimulationConfig& cfg);

/// Dataset of run `run` given the calibrated parameter.
Dataset simulate_dataset(const SimulationConfig& cfg, double parameter, std::uint64_t run);

struct EstimatorSummary {
  std::string name;
  int runs_ok = 0;
  int failures = 0;
  double mean_relative_bias = 0.0;
  double coverage = 0.0;
  double empirical_se = 0.0;
  /// Mean of the per-run bootstrap standard errors.
  double mean_bootstrap_se = 0.0;
  /// Kind of the first failure, if any.
  std::string first_failure;
};

/// Post-weighting overall PSB of one covariate in one run.
struct BalanceRecord {
  int run = 0;
  std::string method;
  std::string covariate;
  double psb_overall = 0.0;
};

struct StudyReport {
  SimulationConfig config;
  DgpCalibration calibration;
  double oracle_true_ddi = 0.0;
  std::vector<EstimatorSummary> estimators;
  std::vector<BalanceRecord> balance;
  /// Per-run point estimates, [run][estimator]; NaN where the run failed.
  std::vector<std::vector<double>> thetas;

  const EstimatorSummary& summary(std::string_view name) const;
};

/// Runs are executed on cfg.threads workers; the report does not depend on
/// the thread count. `calibration` and `oracle` are computed when absent.
/// Throws TooManyFailures when more than 10% of runs fail for an estimator.
StudyReport run_study(const SimulationConfig& cfg, std::optional<DgpCalibration> calibration = std::nullopt,
                      std::optional<double> oracle = std::nullopt);

/// One study per (prevalence, xi) pair, prevalence-major; calibrations and
/// oracle values are shared across the grid.
std::vector<StudyReport> run_grid(const SimulationConfig& base, const std::vector<double>& prevalences,
                                  const std::vector<double>& xis);

}  // namespace mrddi
