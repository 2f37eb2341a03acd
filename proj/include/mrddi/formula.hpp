#pragma once

#include "mrddi/core.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrddi {

enum class Transform { identity, exp, log, square };

struct Factor {
  Transform transform = Transform::identity;
  std::string variable;

  friend bool operator==(const Factor&, const Factor&) = default;
};

enum class TermKind { variable, exp, log, square, interaction };

/// One regressor of a propensity model: a (possibly transformed) covariate,
/// or the product of two such factors.
struct FormulaTerm {
  Factor first;
  std::optional<Factor> second;

  TermKind kind() const;
  friend bool operator==(const FormulaTerm&, const FormulaTerm&) = default;
};

/// Canonical text of a term, e.g. "X2:exp(X4)".
std::string to_string(const FormulaTerm& term);

/// Parses `formula := term ('+' term)*`, `term := factor (':' factor)?`,
/// `factor := IDENT | ('exp'|'log'|'sq') '(' IDENT ')'`. An empty string or
/// "1" denotes the intercept-only model. Throws ParseError (with a character
/// offset) or UnknownVariable; repeated terms are a ParseError.
std::vector<FormulaTerm> parse_formula(std::string_view text, std::span<const std::string> names);

/// n x (1 + q) matrix: a column of ones followed by one column per term.
/// Throws DomainError on log of a non-positive value.
Eigen::MatrixXd build_design_matrix(const Dataset& d, std::span<const FormulaTerm> terms);

std::vector<std::string> design_column_names(std::span<const FormulaTerm> terms);

}  // namespace mrddi
