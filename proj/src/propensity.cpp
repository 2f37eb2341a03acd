#include "mrddi/propensity.hpp"

#include "mrddi/errors.hpp"

#include <Eigen/Cholesky>

namespace mrddi {

namespace {

// An empty arm is not a data error for the fit itself: its probability is
// driven to zero and the Newton iteration reports separation.
void require_fittable(const Dataset& d) {
  auto report = validate_dataset(d);
  std::erase_if(report.violations, [](const Violation& v) { return v.category == "empty arm"; });
  if (!report.accepted()) throw ValidationError(report.summary());
}

Index count_clipped(const Eigen::MatrixXd& probs) {
  return (probs.array() < kProbabilityClip).count() + (probs.array() > 1.0 - kProbabilityClip).count();
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  return ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
}

std::vector<int> arm_categories(const Dataset& d) {
  std::vector<int> y(static_cast<std::size_t>(d.n()));
  for (Index i = 0; i < d.n(); ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(arm_index({d.treat_a(i), d.treat_b(i)}));
  }
  return y;
}

}  // namespace

PropensityModelSpec make_model_spec(std::string label, std::string_view formula, std::span<const std::string> names,
                                    ModelFamily family) {
  return PropensityModelSpec{std::move(label), parse_formula(formula, names), family};
}

Eigen::VectorXd FittedPropensity::stacked_coefficients() const {
  Index total = 0;
  for (const auto& c : coefficients) total += c.size();
  Eigen::VectorXd out(total);
  Index at = 0;
  for (const auto& c : coefficients) {
    out.segment(at, c.size()) = c;
    at += c.size();
  }
  return out;
}

FittedPropensity fit_multinomial_logistic(const Dataset& d, const PropensityModelSpec& spec,
                                          const FitOptions& options) {
  require_fittable(d);
  const Eigen::MatrixXd X = build_design_matrix(d, spec.terms);
  const std::vector<int> y = arm_categories(d);
  const int reference = static_cast<int>(arm_index(options.reference));

  const auto fit = fit_multinomial_newton(X, y, 4, reference, options.newton);

  FittedPropensity out;
  out.spec = spec;
  out.reference = options.reference;
  for (Index k = 0; k < fit.coefficients.cols(); ++k) out.coefficients.emplace_back(fit.coefficients.col(k));
  out.covariance = invert_information(fit.information);
  out.probs = multinomial_probabilities(X, fit.coefficients, reference);
  out.log_likelihood = fit.log_likelihood;
  out.log_likelihood_trace = fit.trace;
  out.converged = fit.converged;
  out.iterations = fit.iterations;
  out.clipped = count_clipped(out.probs);
  return out;
}

FittedPropensity fit_factored_binary(const Dataset& d, const PropensityModelSpec& spec, const FitOptions& options) {
  require_fittable(d);
  const Eigen::MatrixXd X = build_design_matrix(d, spec.terms);
  const Index n = X.rows();
  const Index c = X.cols();

  std::vector<int> ya(static_cast<std::size_t>(n));
  std::vector<int> yb(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    ya[static_cast<std::size_t>(i)] = d.treat_a(i);
    yb[static_cast<std::size_t>(i)] = d.treat_b(i);
  }

  Eigen::MatrixXd XA(n, c + 1);
  XA.leftCols(c) = X;
  XA.col(c) = d.treat_a.cast<double>();

  const auto fit_a = fit_multinomial_newton(X, ya, 2, 0, options.newton);
  const auto fit_b = fit_multinomial_newton(XA, yb, 2, 0, options.newton);

  // P(A = 1 | X) and P(B = 1 | A = a, X) for a = 0, 1.
  const Eigen::ArrayXd pa = multinomial_probabilities(X, fit_a.coefficients, 0).col(1).array();
  XA.col(c).setZero();
  const Eigen::ArrayXd pb0 = multinomial_probabilities(XA, fit_b.coefficients, 0).col(1).array();
  XA.col(c).setOnes();
  const Eigen::ArrayXd pb1 = multinomial_probabilities(XA, fit_b.coefficients, 0).col(1).array();

  FittedPropensity out;
  out.spec = spec;
  out.reference = options.reference;
  out.coefficients = {fit_a.coefficients.col(0), fit_b.coefficients.col(0)};
  out.covariance = Eigen::MatrixXd::Zero(2 * c + 1, 2 * c + 1);
  out.covariance.topLeftCorner(c, c) = invert_information(fit_a.information);
  out.covariance.bottomRightCorner(c + 1, c + 1) = invert_information(fit_b.information);

  out.probs.resize(n, 4);
  out.probs.col(arm_index({1, 1})) = pa * pb1;
  out.probs.col(arm_index({1, 0})) = pa * (1.0 - pb1);
  out.probs.col(arm_index({0, 1})) = (1.0 - pa) * pb0;
  out.probs.col(arm_index({0, 0})) = (1.0 - pa) * (1.0 - pb0);

  out.log_likelihood = fit_a.log_likelihood + fit_b.log_likelihood;
  out.log_likelihood_trace = {out.log_likelihood};
  out.converged = fit_a.converged && fit_b.converged;
  out.iterations = fit_a.iterations + fit_b.iterations;
  out.clipped = count_clipped(out.probs);
  return out;
}

FittedPropensity fit_propensity(const Dataset& d, const PropensityModelSpec& spec, const FitOptions& options) {
  return spec.family == ModelFamily::multinomial ? fit_multinomial_logistic(d, spec, options)
                                                 : fit_factored_binary(d, spec, options);
}

Eigen::VectorXd predict_arm_probabilities(const FittedPropensity& f, Arm arm) {
  return f.probs.col(static_cast<Index>(arm_index(arm))).cwiseMax(kProbabilityClip).cwiseMin(1.0 - kProbabilityClip);
}

}  // namespace mrddi
