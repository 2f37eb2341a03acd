#include "mrddi/formula.hpp"

#include "mrddi/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mrddi {

namespace {

std::string factor_string(const Factor& f) {
  switch (f.transform) {
    case Transform::identity: return f.variable;
    case Transform::exp: return "exp(" + f.variable + ")";
    case Transform::log: return "log(" + f.variable + ")";
    case Transform::square: return "sq(" + f.variable + ")";
  }
  return f.variable;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

  std::vector<FormulaTerm> parse() {
    skip_space();
    if (at_end()) return {};
    if (trimmed_rest() == "1") return {};

    std::vector<FormulaTerm> terms;
    std::vector<std::string> keys;
    while (true) {
      const std::size_t start = position();
      FormulaTerm term = parse_term();
      const std::string key = canonical_key(term);
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        throw ParseError(start, "duplicate term '" + to_string(term) + "'");
      }
      keys.push_back(key);
      terms.push_back(std::move(term));

      skip_space();
      if (at_end()) break;
      if (text_[pos_] != '+') throw ParseError(pos_, "expected '+'");
      ++pos_;
    }
    return terms;
  }

 private:
  std::size_t position() {
    skip_space();
    return pos_;
  }

  std::string_view trimmed_rest() const {
    std::string_view rest = text_.substr(pos_);
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.remove_suffix(1);
    return rest;
  }

  FormulaTerm parse_term() {
    FormulaTerm term;
    term.first = parse_factor();
    skip_space();
    if (!at_end() && text_[pos_] == ':') {
      ++pos_;
      term.second = parse_factor();
    }
    return term;
  }

  Factor parse_factor() {
    skip_space();
    if (at_end() || !ident_start(text_[pos_])) {
      throw ParseError(pos_, "expected a covariate name or transform");
    }
    const std::size_t ident_pos = pos_;
    std::string ident = read_ident();
    skip_space();
    if (!at_end() && text_[pos_] == '(') {
      Factor f;
      if (ident == "exp") {
        f.transform = Transform::exp;
      } else if (ident == "log") {
        f.transform = Transform::log;
      } else if (ident == "sq") {
        f.transform = Transform::square;
      } else {
        throw ParseError(ident_pos, "unknown transform '" + ident + "'");
      }
      ++pos_;
      skip_space();
      if (at_end() || !ident_start(text_[pos_])) throw ParseError(pos_, "expected a covariate name");
      f.variable = read_ident();
      skip_space();
      if (at_end() || text_[pos_] != ')') throw ParseError(pos_, "expected ')'");
      ++pos_;
      check_name(f.variable);
      return f;
    }
    check_name(ident);
    return Factor{Transform::identity, std::move(ident)};
  }

  std::string read_ident() {
    const std::size_t start = pos_;
    while (!at_end() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void check_name(const std::string& name) const {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) throw UnknownVariable(name);
  }

  static std::string canonical_key(const FormulaTerm& t) {
    std::string a = factor_string(t.first);
    if (!t.second) return a;
    std::string b = factor_string(*t.second);
    if (b < a) std::swap(a, b);
    return a + ":" + b;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

Eigen::VectorXd evaluate_factor(const Dataset& d, const Factor& f) {
  const auto x = d.covariate(f.variable);
  switch (f.transform) {
    case Transform::identity: return x;
    case Transform::exp: return x.array().exp().matrix();
    case Transform::square: return x.array().square().matrix();
    case Transform::log:
      for (Index i = 0; i < x.size(); ++i) {
        if (!(x(i) > 0.0)) {
          throw DomainError("propensity",
                            "log(" + f.variable + ") of non-positive value at row " + std::to_string(i));
        }
      }
      return x.array().log().matrix();
  }
  return x;
}

}  // namespace

TermKind FormulaTerm::kind() const {
  if (second) return TermKind::interaction;
  switch (first.transform) {
    case Transform::identity: return TermKind::variable;
    case Transform::exp: return TermKind::exp;
    case Transform::log: return TermKind::log;
    case Transform::square: return TermKind::square;
  }
  return TermKind::variable;
}

std::string to_string(const FormulaTerm& term) {
  std::string s = factor_string(term.first);
  if (term.second) s += ":" + factor_string(*term.second);
  return s;
}

std::vector<FormulaTerm> parse_formula(std::string_view text, std::span<const std::string> names) {
  return Parser(text, names).parse();
}

Eigen::MatrixXd build_design_matrix(const Dataset& d, std::span<const FormulaTerm> terms) {
  Eigen::MatrixXd design(d.n(), 1 + static_cast<Index>(terms.size()));
  design.col(0).setOnes();
  for (std::size_t j = 0; j < terms.size(); ++j) {
    Eigen::VectorXd column = evaluate_factor(d, terms[j].first);
    if (terms[j].second) column.array() *= evaluate_factor(d, *terms[j].second).array();
    design.col(static_cast<Index>(j) + 1) = column;
  }
  return design;
}

std::vector<std::string> design_column_names(std::span<const FormulaTerm> terms) {
  std::vector<std::string> names{"(Intercept)"};
  for (const auto& t : terms) names.push_back(to_string(t));
  return names;
}

}  // namespace mrddi
