#include "helpers.hpp"

#include "mrddi/dual.hpp"
#include "mrddi/errors.hpp"
#include "mrddi/propensity.hpp"
#include "mrddi/simulation.hpp"
#include "mrddi/weights.hpp"

#include <doctest.h>

#include <cmath>

using namespace mrddi;

namespace {

/// A fit whose arm column is given directly; other arms share the remainder.
FittedPropensity fixed_fit(const std::string& label, Arm arm, const std::vector<double>& p) {
  FittedPropensity f;
  f.spec.label = label;
  const auto n = static_cast<Index>(p.size());
  f.probs.resize(n, 4);
  for (Index i = 0; i < n; ++i) {
    f.probs.row(i).setConstant((1.0 - p[static_cast<std::size_t>(i)]) / 3.0);
    f.probs(i, static_cast<Index>(arm_index(arm))) = p[static_cast<std::size_t>(i)];
  }
  return f;
}

ArmPartition partition_with(Arm arm, std::vector<Index> rows) {
  ArmPartition part;
  part.members[arm_index(arm)] = std::move(rows);
  return part;
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd g(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) g(i++, 0) = x;
  return g;
}

}  // namespace

TEST_CASE("IPTW on an arm of two") {
  const Arm arm{1, 1};
  const auto f = fixed_fit("m", arm, {0.2, 0.4});
  const auto w = iptw_weights(f, partition_with(arm, {0, 1}), arm);
  CHECK(w.weights(0) == doctest::Approx(2.0 / 3.0));
  CHECK(w.weights(1) == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(w.degenerate);
}

TEST_CASE("IPTW with constant probability is uniform and always sums to one") {
  const Arm arm{0, 1};
  const auto flat = iptw_weights(fixed_fit("m", arm, {0.3, 0.3, 0.3}), partition_with(arm, {0, 1, 2}), arm);
  CHECK((flat.weights.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

  Rng rng(1, 0, Stage::check);
  std::vector<double> p(50);
  std::vector<Index> rows(50);
  for (int i = 0; i < 50; ++i) {
    p[i] = rng.uniform(0.01, 0.99);
    rows[i] = i;
  }
  const auto w = iptw_weights(fixed_fit("m", arm, p), partition_with(arm, rows), arm);
  CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("IPTW flags an arm that leans on clipped probabilities") {
  const Arm arm{1, 0};
  const auto w = iptw_weights(fixed_fit("m", arm, {0.0, 0.5, 0.5, 0.5}), partition_with(arm, {0, 1, 2, 3}), arm);
  CHECK(w.clipped == 1);
  CHECK(w.degenerate);
}

TEST_CASE("constant propensity column is dropped") {
  const auto d = testing::null_dataset(400, 2);
  const auto f = fit_propensity(d, make_model_spec("m0", "1", d.covariate_names));
  const auto part = arm_partition(d);
  const std::vector<FittedPropensity> fits{f};
  CHECK_THROWS_AS(build_constraint_matrix(fits, d, part, {1, 1}), AllColumnsDropped);
  const auto w = el_weights(fits, d, part, {1, 1});
  CHECK((w.weights.array() - 1.0 / static_cast<double>(part.size({1, 1}))).abs().maxCoeff() < 1e-15);
  CHECK(w.dropped_columns.size() == 1);
}

TEST_CASE("balance column is centered at the pooled mean") {
  const auto d = testing::make_dataset({0, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {{1, 2, 3, 4}}, {"X"});
  const Arm arm{1, 1};
  const std::vector<std::string> balance{"X"};
  const auto G = build_constraint_matrix(std::span<const FittedPropensity>{}, d, partition_with(arm, {0, 1}), arm, balance);
  REQUIRE(G.values.cols() == 1);
  CHECK(G.values(0, 0) == doctest::Approx(-1.5));
  CHECK(G.values(1, 0) == doctest::Approx(-0.5));
}

TEST_CASE("full-sample model columns sum to zero") {
  const auto d = testing::null_dataset(800, 3);
  const std::vector<FittedPropensity> fits{fit_propensity(d, make_model_spec("a", "X1 + X2", d.covariate_names)),
                                           fit_propensity(d, make_model_spec("b", "X3", d.covariate_names))};
  for (Arm arm : kArms) {
    const Eigen::MatrixXd c = centered_propensity_columns(fits, arm);
    CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("symmetric single column gives rho zero") {
  for (double c : {0.01, 0.5, 3.0}) {
    const auto sol = solve_dual(column({c, -c}));
    CHECK(std::abs(sol.rho(0)) < 1e-12);
  }
}

TEST_CASE("two-point dual matches the bisection oracle") {
  const auto sol = solve_dual(column({0.2, -0.1}));
  const double oracle = testing::dual_root_k1({0.2, -0.1});
  CHECK(oracle == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(std::abs(sol.rho(0) - oracle) < 1e-8);
}

TEST_CASE("four-point dual matches the bisection oracle") {
  const auto sol = solve_dual(column({0.3, 0.1, -0.2, -0.15}));
  CHECK(std::abs(sol.rho(0) - testing::dual_root_k1({0.3, 0.1, -0.2, -0.15})) < 1e-8);
}

TEST_CASE("dual objective decreases along the Newton path") {
  const auto sol = solve_dual(column({0.9, 0.4, -0.1, -0.2, -0.3}));
  for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
    CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1] + 1e-14);
  }
}

TEST_CASE("EL weights from a two-point arm") {
  // Arm probabilities 0.4 and 0.1 against a full-sample mean of 0.2 give g = (0.2, -0.1).
  const Arm arm{1, 1};
  const auto f = fixed_fit("m", arm, {0.4, 0.1, 0.1, 0.2});
  const auto d = testing::make_dataset({0, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {{1, 2, 3, 4}}, {"X"});
  const std::vector<FittedPropensity> fits{f};
  const auto w = el_weights(fits, d, partition_with(arm, {0, 1}), arm);
  CHECK(w.weights(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(w.weights(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(std::abs(w.weights(0) * 0.2 + w.weights(1) * -0.1) < 1e-8);
}

TEST_CASE("duplicated model leaves EL weights unchanged") {
  const auto d = testing::null_dataset(600, 4);
  const auto part = arm_partition(d);
  const auto f = fit_propensity(d, make_model_spec("a", "X1 + X2", d.covariate_names));
  const std::vector<FittedPropensity> one{f}, two{f, f};
  for (Arm arm : kArms) {
    const auto w1 = el_weights(one, d, part, arm);
    const auto w2 = el_weights(two, d, part, arm);
    CHECK((w1.weights - w2.weights).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(w2.dropped_columns.size() == 1);
  }
}

TEST_CASE("balance-only column straddling the mean gives uniform weights") {
  const auto d = testing::make_dataset({0, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {{3.0, 2.0, 1.5, 3.5}}, {"X"});
  const Arm arm{1, 1};
  const std::vector<std::string> balance{"X"};
  const auto G = build_constraint_matrix(std::span<const FittedPropensity>{}, d, partition_with(arm, {0, 1}), arm, balance);
  CHECK(G.values(0, 0) == doctest::Approx(0.5));
  CHECK(G.values(1, 0) == doctest::Approx(-0.5));
  const auto sol = solve_dual(G);
  CHECK(std::abs(sol.rho(0)) < 1e-12);
}

TEST_CASE("three-point balance column solves to the oracle and balances exactly") {
  const Eigen::MatrixXd g = column({1.0, -0.5, -0.5});
  // Symmetric negatives force w2 = w3; balance then gives w1 = 1/3.
  const auto sol = solve_dual(g);
  CHECK(std::abs(sol.rho(0) - testing::dual_root_k1({1.0, -0.5, -0.5})) < 1e-8);
  const Eigen::VectorXd raw = ((g * sol.rho).array() + 1.0).inverse();
  const Eigen::VectorXd w = raw / raw.sum();
  CHECK(w(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(std::abs(g.col(0).dot(w)) < 1e-10);
}

TEST_CASE("mELCB weights balance the requested covariates") {
  SimulationConfig cfg;
  cfg.n = 2000;
  const auto d = simulate_dataset(cfg, 0.0, 11);
  const auto part = arm_partition(d);
  std::vector<FittedPropensity> fits;
  for (const auto& spec : models_with_truth()) fits.push_back(fit_propensity(d, spec));
  const std::vector<std::string> balance{"X2", "X3"};
  for (Arm arm : kArms) {
    const auto w = melcb_weights(fits, d, part, arm, balance);
    CHECK(w.constraint_residual < 1e-8);
    CHECK(w.weights.minCoeff() > 0);
    CHECK(w.weights.sum() == doctest::Approx(1.0));
    for (const auto& name : balance) {
      const auto x = d.covariate(name);
      double wm = 0;
      for (std::size_t r = 0; r < w.rows.size(); ++r) wm += w.weights(static_cast<Index>(r)) * x(w.rows[r]);
      CHECK(std::abs(wm - x.mean()) < 1e-8);
    }
  }
}

TEST_CASE("mELCB without balance covariates is rejected") {
  const auto d = testing::null_dataset(200, 1);
  const std::vector<FittedPropensity> fits{fit_propensity(d, make_model_spec("a", "X1", d.covariate_names))};
  CHECK_THROWS_AS(melcb_weights(fits, d, arm_partition(d), {1, 1}, {}), Error);
}

TEST_CASE("constraints without a positive solution are reported, not converged") {
  // Zero is outside the hull of the rows, so F decreases without bound.
  CHECK_THROWS_AS(solve_dual(column({0.2, 0.1, 0.4})), DualNonConvergence);
  Eigen::MatrixXd g(4, 2);
  g << 1, 0.5, 0.2, 1, 0.3, -0.1, 0.5, 0.4;
  CHECK_THROWS_AS(solve_dual(g), DualNonConvergence);
}
