#include "mrddi/weights.hpp"

#include "mrddi/errors.hpp"

#include <cmath>

namespace mrddi {

namespace {

constexpr double kZeroColumn = 1e-12;
constexpr double kRankTolerance = 1e-8;
constexpr double kDegenerateShare = 0.05;

std::vector<std::string> labels_of(std::span<const FittedPropensity> fits) {
  std::vector<std::string> labels;
  for (const auto& f : fits) labels.push_back(f.spec.label);
  return labels;
}

/// Same as build_constraint_matrix but may return zero columns.
ConstraintMatrix assemble_constraints(std::span<const FittedPropensity> fits, const Dataset& d,
                                      const ArmPartition& part, Arm arm,
                                      std::span<const std::string> balance_covariates) {
  const auto& rows = part[arm];
  const auto m = static_cast<Index>(rows.size());
  const auto J = static_cast<Index>(fits.size());
  const auto P = static_cast<Index>(balance_covariates.size());

  Eigen::MatrixXd raw(m, J + P);
  Eigen::VectorXd centers(J + P);
  std::vector<std::string> labels;

  const std::size_t col = arm_index(arm);
  for (Index j = 0; j < J; ++j) {
    const auto probs = fits[static_cast<std::size_t>(j)].probs.col(static_cast<Index>(col));
    centers(j) = probs.mean();
    for (Index r = 0; r < m; ++r) raw(r, j) = probs(rows[static_cast<std::size_t>(r)]) - centers(j);
    labels.push_back(fits[static_cast<std::size_t>(j)].spec.label);
  }
  for (Index l = 0; l < P; ++l) {
    const auto& name = balance_covariates[static_cast<std::size_t>(l)];
    const auto x = d.covariate(name);
    centers(J + l) = x.mean();
    for (Index r = 0; r < m; ++r) raw(r, J + l) = x(rows[static_cast<std::size_t>(r)]) - centers(J + l);
    labels.push_back(name);
  }

  // Gram-Schmidt in specification order, with one reorthogonalization pass.
  double leading = 0.0;
  for (Index k = 0; k < raw.cols(); ++k) leading = std::max(leading, raw.col(k).norm());

  ConstraintMatrix out;
  out.arm = arm;
  out.rows = rows;
  std::vector<Index> kept;
  Eigen::MatrixXd basis(m, raw.cols());
  for (Index k = 0; k < raw.cols(); ++k) {
    const auto label = labels[static_cast<std::size_t>(k)];
    if (raw.col(k).cwiseAbs().maxCoeff() <= kZeroColumn) {
      out.dropped_columns.push_back(label);
      continue;
    }
    Eigen::VectorXd r = raw.col(k);
    const auto q = static_cast<Index>(kept.size());
    for (int pass = 0; pass < 2; ++pass) {
      if (q > 0) r -= basis.leftCols(q) * (basis.leftCols(q).transpose() * r);
    }
    const double norm = r.norm();
    if (norm <= kRankTolerance * leading) {
      out.dropped_columns.push_back(label);
      continue;
    }
    basis.col(q) = r / norm;
    kept.push_back(k);
  }

  out.values.resize(m, static_cast<Index>(kept.size()));
  out.centers.resize(static_cast<Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    out.values.col(static_cast<Index>(c)) = raw.col(kept[c]);
    out.centers(static_cast<Index>(c)) = centers(kept[c]);
    out.column_labels.push_back(labels[static_cast<std::size_t>(kept[c])]);
  }
  return out;
}

WeightSet weights_from_dual(const ConstraintMatrix& G, const DualOptions& options, WeightMethod method,
                            std::vector<std::string> provenance) {
  WeightSet w;
  w.arm = G.arm;
  w.rows = G.rows;
  w.method = method;
  w.provenance = std::move(provenance);
  w.dropped_columns = G.dropped_columns;

  const auto m = static_cast<Index>(G.rows.size());
  if (G.values.cols() == 0) {
    w.weights = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    return w;
  }
  const DualSolution sol = solve_dual(G.values, options);
  const Eigen::VectorXd raw = ((G.values * sol.rho).array() + 1.0).inverse().matrix();
  w.weights = raw / raw.sum();
  w.constraint_residual = (G.values.transpose() * w.weights).cwiseAbs().maxCoeff();
  return w;
}

}  // namespace

std::string to_string(WeightMethod method) {
  switch (method) {
    case WeightMethod::iptw: return "IPTW";
    case WeightMethod::el: return "EL";
    case WeightMethod::melcb: return "mELCB";
  }
  return "?";
}

WeightSet uniform_weights(const ArmPartition& part, Arm arm) {
  WeightSet w;
  w.arm = arm;
  w.rows = part[arm];
  const auto m = static_cast<Index>(w.rows.size());
  w.weights = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  w.provenance = {"unweighted"};
  return w;
}

WeightSet iptw_weights(const FittedPropensity& f, const ArmPartition& part, Arm arm) {
  WeightSet w;
  w.arm = arm;
  w.rows = part[arm];
  w.method = WeightMethod::iptw;
  w.provenance = {f.spec.label};

  const auto m = static_cast<Index>(w.rows.size());
  const auto col = f.probs.col(static_cast<Index>(arm_index(arm)));
  Eigen::VectorXd inverse(m);
  for (Index r = 0; r < m; ++r) {
    double p = col(w.rows[static_cast<std::size_t>(r)]);
    if (p < kProbabilityClip || p > 1.0 - kProbabilityClip) {
      ++w.clipped;
      p = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
    }
    inverse(r) = 1.0 / p;
  }
  w.weights = inverse / inverse.sum();
  w.degenerate = static_cast<double>(w.clipped) > kDegenerateShare * static_cast<double>(m);
  return w;
}

Eigen::MatrixXd centered_propensity_columns(std::span<const FittedPropensity> fits, Arm arm) {
  const Index n = fits.empty() ? 0 : fits.front().probs.rows();
  Eigen::MatrixXd out(n, static_cast<Index>(fits.size()));
  for (std::size_t j = 0; j < fits.size(); ++j) {
    const auto probs = fits[j].probs.col(static_cast<Index>(arm_index(arm)));
    out.col(static_cast<Index>(j)) = probs.array() - probs.mean();
  }
  return out;
}

ConstraintMatrix build_constraint_matrix(std::span<const FittedPropensity> fits, const Dataset& d,
                                         const ArmPartition& part, Arm arm,
                                         std::span<const std::string> balance_covariates) {
  ConstraintMatrix G = assemble_constraints(fits, d, part, arm, balance_covariates);
  if (G.values.cols() == 0) {
    throw AllColumnsDropped("every constraint column for arm " + arm_label(arm) + " is degenerate");
  }
  return G;
}

DualSolution solve_dual(const ConstraintMatrix& G, const DualOptions& options) {
  DualSolution sol = solve_dual(G.values, options);
  sol.dropped_columns = G.dropped_columns;
  return sol;
}

WeightSet el_weights(std::span<const FittedPropensity> fits, const Dataset& d, const ArmPartition& part, Arm arm,
                     const DualOptions& options) {
  if (fits.empty()) throw Error("weights", "InvalidArgument", "EL weights need at least one fitted model");
  const ConstraintMatrix G = assemble_constraints(fits, d, part, arm, {});
  return weights_from_dual(G, options, WeightMethod::el, labels_of(fits));
}

WeightSet melcb_weights(std::span<const FittedPropensity> fits, const Dataset& d, const ArmPartition& part, Arm arm,
                        std::span<const std::string> balance_covariates, const DualOptions& options) {
  if (balance_covariates.empty()) {
    throw Error("weights", "InvalidArgument", "mELCB weights need at least one balance covariate");
  }
  const ConstraintMatrix G = build_constraint_matrix(fits, d, part, arm, balance_covariates);
  auto provenance = labels_of(fits);
  for (const auto& name : balance_covariates) provenance.push_back("balance:" + name);
  return weights_from_dual(G, options, WeightMethod::melcb, std::move(provenance));
}

}  // namespace mrddi
