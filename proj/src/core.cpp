#include "mrddi/core.hpp"

#include "mrddi/errors.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace mrddi {

std::string arm_label(Arm arm) {
  return "(" + std::to_string(arm.a) + "," + std::to_string(arm.b) + ")";
}

Index Dataset::covariate_index(std::string_view name) const {
  for (std::size_t k = 0; k < covariate_names.size(); ++k) {
    if (covariate_names[k] == name) return static_cast<Index>(k);
  }
  throw UnknownVariable(std::string(name));
}

Dataset take_rows(const Dataset& d, std::span<const Index> rows) {
  const auto m = static_cast<Index>(rows.size());
  Dataset out;
  out.outcome.resize(m);
  out.treat_a.resize(m);
  out.treat_b.resize(m);
  out.covariates.resize(m, d.p());
  out.covariate_names = d.covariate_names;
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    out.outcome(r) = d.outcome(i);
    out.treat_a(r) = d.treat_a(i);
    out.treat_b(r) = d.treat_b(i);
    out.covariates.row(r) = d.covariates.row(i);
  }
  return out;
}

bool ValidationReport::accepted() const {
  for (const auto& v : violations) {
    if (v.severity == Severity::fatal) return false;
  }
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& v : violations) {
    if (v.severity != Severity::fatal) continue;
    if (!first) os << "; ";
    os << v.category << ": " << v.detail;
    first = false;
  }
  return os.str();
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  auto fatal = [&](std::string category, std::string detail) {
    report.violations.push_back({Severity::fatal, std::move(category), std::move(detail)});
  };

  const Index n = d.n();
  if (n < 1) fatal("shape", "dataset has no rows");
  if (d.p() < 1) fatal("shape", "dataset has no covariates");
  if (d.treat_a.size() != n || d.treat_b.size() != n || d.covariates.rows() != n) {
    fatal("shape", "outcome, treatment and covariate lengths disagree");
  }
  if (static_cast<Index>(d.covariate_names.size()) != d.p()) {
    fatal("shape", "covariate name count does not match covariate columns");
  }
  if (!report.accepted()) return report;

  std::set<std::string> seen;
  for (const auto& name : d.covariate_names) {
    if (name.empty()) fatal("covariate name", "empty covariate name");
    if (!seen.insert(name).second) fatal("covariate name", "duplicate covariate name '" + name + "'");
  }

  bool binary = true;
  for (Index i = 0; i < n; ++i) {
    const bool a_ok = d.treat_a(i) == 0 || d.treat_a(i) == 1;
    const bool b_ok = d.treat_b(i) == 0 || d.treat_b(i) == 1;
    if (!a_ok || !b_ok) {
      fatal("non-binary treatment", "row " + std::to_string(i) + " has A=" + std::to_string(d.treat_a(i)) +
                                        ", B=" + std::to_string(d.treat_b(i)));
      binary = false;
    }
  }

  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(d.outcome(i))) fatal("missing value", "outcome at row " + std::to_string(i));
  }
  for (Index k = 0; k < d.p(); ++k) {
    const auto col = d.covariates.col(k);
    if (!col.allFinite()) {
      fatal("missing value", "covariate '" + d.covariate_names[static_cast<std::size_t>(k)] + "'");
    } else if (col.maxCoeff() == col.minCoeff()) {
      report.violations.push_back(
          {Severity::warning, "constant covariate", d.covariate_names[static_cast<std::size_t>(k)]});
    }
  }

  if (binary) {
    std::array<Index, 4> counts{};
    for (Index i = 0; i < n; ++i) ++counts[arm_index({d.treat_a(i), d.treat_b(i)})];
    for (const Arm arm : kArms) {
      if (counts[arm_index(arm)] == 0) fatal("empty arm", "arm " + arm_label(arm) + " has no members");
    }
  }
  return report;
}

void require_valid(const Dataset& d) {
  const auto report = validate_dataset(d);
  if (!report.accepted()) throw ValidationError(report.summary());
}

ArmPartition arm_partition(const Dataset& d) {
  ArmPartition part;
  for (Index i = 0; i < d.n(); ++i) {
    const int a = d.treat_a(i);
    const int b = d.treat_b(i);
    if ((a != 0 && a != 1) || (b != 0 && b != 1)) {
      throw ValidationError("non-binary treatment at row " + std::to_string(i));
    }
    part.members[arm_index({a, b})].push_back(i);
  }
  for (const Arm arm : kArms) {
    if (part[arm].empty()) throw EmptyArm("arm " + arm_label(arm) + " has no members");
  }
  return part;
}

}  // namespace mrddi
