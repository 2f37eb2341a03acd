#include "helpers.hpp"

#include "mrddi/errors.hpp"
#include "mrddi/simulation.hpp"

#include <doctest.h>

#include <cmath>

using namespace mrddi;

TEST_CASE("covariate distributions") {
  Rng rng(1, 0, Stage::check);
  const Eigen::MatrixXd X = gen_covariates(1'000'000, rng);
  const double expected[5] = {0.2, 0.4, 0.0, 0.0, 1.0};
  for (int k = 0; k < 5; ++k) CHECK(std::abs(X.col(k).mean() - expected[k]) < 0.005);
  CHECK(X.col(3).minCoeff() >= -0.5);
  CHECK(X.col(3).maxCoeff() <= 0.5);
  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  for (int j = 0; j < 5; ++j) {
    for (int k = 0; k < j; ++k) CHECK(std::abs(cov(j, k) / std::sqrt(cov(j, j) * cov(k, k))) < 0.005);
  }
}

TEST_CASE("treatment probabilities at the zero row") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 5);
  const auto q = treatment_odds(X.row(0));
  // exp(X4) = exp(X5) = 1 at the zero row.
  const double q11 = std::exp(0.7 - 0.4 - 0.4), q01 = std::exp(0.6 - 0.6 - 0.2), q10 = std::exp(0.5 - 0.2 - 0.2);
  CHECK(std::abs(q[0] - q11) < 1e-12);
  CHECK(std::abs(q[1] - q01) < 1e-12);
  CHECK(std::abs(q[2] - q10) < 1e-12);
  const Eigen::MatrixXd P = treatment_probabilities(X, 0.0);
  const double total = 1 + q11 + q01 + q10;
  CHECK(std::abs(P(0, arm_index({1, 1})) - q11 / total) < 1e-12);
  CHECK(std::abs(P(0, arm_index({0, 0})) - 1 / total) < 1e-12);
  CHECK(treatment_probabilities(X, -60.0)(0, arm_index({0, 0})) > 1 - 1e-12);
}

TEST_CASE("latent treatment thresholds") {
  Rng rng(2, 0, Stage::check);
  const Eigen::MatrixXd X = gen_covariates(1'000'000, rng);
  const auto draw = gen_treatment_latent(X, 1.0, rng);
  const Eigen::VectorXd z1c = draw.z1.array() - draw.z1.mean();
  const Eigen::VectorXd z2c = draw.z2.array() - draw.z2.mean();
  CHECK(z1c.dot(z2c) < 0);
  const auto far = gen_treatment_latent(X.topRows(1000), 1e6, rng);
  CHECK(far.a.sum() == 0);
  CHECK(far.b.sum() == 0);
}

TEST_CASE("outcome model at the zero row") {
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(5);
  const double expected = 1.0 / (1.0 + std::exp(-0.5));
  for (double xi : {0.0, 0.5, 1.0, 2.0}) CHECK(std::abs(outcome_probability(x, 0, 0, xi) - expected) < 1e-15);
}

TEST_CASE("at xi zero the outcome has no interaction on the link scale") {
  Rng rng(3, 0, Stage::check);
  const Eigen::MatrixXd X = gen_covariates(50, rng);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  for (Index i = 0; i < X.rows(); ++i) {
    const auto x = X.row(i);
    const double inter = logit(outcome_probability(x, 1, 1, 0)) - logit(outcome_probability(x, 0, 1, 0)) -
                         logit(outcome_probability(x, 1, 0, 0)) + logit(outcome_probability(x, 0, 0, 0));
    CHECK(std::abs(inter) < 1e-12);
  }
}

TEST_CASE("mean outcome matches an independent coding of the outcome model") {
  Rng rng(4, 0, Stage::check);
  const Eigen::MatrixXd X = gen_covariates(1'000'000, rng);
  const auto t = gen_treatment_mnl(X, 0.0, rng);
  const Eigen::VectorXd Y = gen_outcome(X, t.a, t.b, 1.0, rng);
  double expected = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double x1 = X(i, 0), x2 = X(i, 1), x3 = X(i, 2), e4 = std::exp(X(i, 3)), e5 = std::exp(X(i, 4));
    const double a = t.a(i), b = t.b(i);
    const double g = x1 + x2 - x3 + e4 - e5 + x1 * x3 + x2 * e4;
    const double lp = 0.5 - 0.1 * a - 0.2 * b - a * b + 0.4 * g * (0.5 + 0.2 * a + 0.1 * b + a * b);
    expected += 1.0 / (1.0 + std::exp(-lp));
  }
  expected /= static_cast<double>(X.rows());
  // Binomial standard error of the mean is below 0.0005.
  CHECK(std::abs(Y.mean() - expected) < 0.002);
}

TEST_CASE("prevalence curves are monotone") {
  const PrevalenceCurve a(Dgp::logistic, 20000, 1);
  const PrevalenceCurve b(Dgp::latent, 20000, 1);
  double last_a = 2, last_b = -1;
  for (double p = -3; p <= 3; p += 0.25) {
    const double va = a(p), vb = b(p);
    CHECK(va < last_a);
    CHECK(vb >= last_b);
    last_a = va;
    last_b = vb;
  }
}

TEST_CASE("calibration hits the target and survives an independent draw") {
  struct Case {
    Dgp dgp;
    double target;
  };
  for (const Case c : {Case{Dgp::logistic, 0.50}, Case{Dgp::latent, 0.10}}) {
    const auto cal = calibrate_prevalence(c.dgp, c.target, 1'000'000, 1);
    CHECK(std::abs(cal.achieved_prevalence - c.target) < 0.002);
    Rng rng(77, 0, Stage::check);
    const Eigen::MatrixXd X = gen_covariates(1'000'000, rng);
    const auto t = c.dgp == Dgp::logistic ? gen_treatment_mnl(X, cal.parameter, rng)
                                          : gen_treatment_latent(X, cal.parameter, rng);
    const double share = ((1 - t.a.array()) * (1 - t.b.array())).cast<double>().mean();
    CHECK(std::abs(share - c.target) < 0.002);
  }
}

TEST_CASE("unreachable prevalence is a bracket error") {
  CHECK_THROWS_AS(calibrate_prevalence(Dgp::logistic, 1e-10, 10000, 1), BracketError);
}

TEST_CASE("small study runs and is independent of the thread count") {
  SimulationConfig cfg;
  cfg.n = 300;
  cfg.runs = 4;
  cfg.bootstrap_R = 10;
  cfg.calibration_mc_size = 20000;
  cfg.oracle_mc_size = 20000;
  const auto one = run_study(cfg);
  cfg.threads = 3;
  const auto three = run_study(cfg);
  REQUIRE(one.estimators.size() == 6);
  CHECK(one.estimators.front().name == "IPTW-x1x2");
  CHECK(one.estimators.back().name == "mELCB");
  for (std::size_t e = 0; e < one.estimators.size(); ++e) {
    CHECK(one.estimators[e].mean_relative_bias == three.estimators[e].mean_relative_bias);
    CHECK(one.estimators[e].coverage == three.estimators[e].coverage);
    CHECK(one.estimators[e].mean_bootstrap_se == three.estimators[e].mean_bootstrap_se);
  }
  for (const auto& b : one.balance) {
    if (b.method == "mELCB" && (b.covariate == "X2" || b.covariate == "X3")) CHECK(b.psb_overall < 1e-6);
  }
}

TEST_CASE("correct model formula") {
  const auto truth = models_with_truth();
  REQUIRE(truth.size() == 4);
  CHECK(truth.back().terms.size() == 7);
  for (const auto& m : models_all_wrong()) {
    for (const auto& t : m.terms) {
      CHECK(t.first.variable != "X2");
      CHECK(t.first.variable != "X3");
    }
  }
}
