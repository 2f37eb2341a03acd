#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mrddi {

/// Root of every exception the library throws. `module()` names the
/// component that raised it and `kind()` is a stable tag used in error
/// artifacts written by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string kind, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string module_;
  std::string kind_;
};

// core-data

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error("core-data", "ValidationError", msg) {}
};

class EmptyArm : public Error {
 public:
  explicit EmptyArm(const std::string& msg) : Error("core-data", "EmptyArm", msg) {}
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(std::string name)
      : Error("propensity", "UnknownVariable", "unknown variable '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// propensity

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& msg)
      : Error("propensity", "ParseError", msg + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class DomainError : public Error {
 public:
  DomainError(std::string module, const std::string& msg) : Error(std::move(module), "DomainError", msg) {}
};

class SeparationError : public Error {
 public:
  explicit SeparationError(const std::string& msg) : Error("propensity", "SeparationError", msg) {}
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& msg) : Error("propensity", "NonConvergence", msg) {}
};

// weights

class AllColumnsDropped : public Error {
 public:
  explicit AllColumnsDropped(const std::string& msg) : Error("weights", "AllColumnsDropped", msg) {}
};

class DualNonConvergence : public Error {
 public:
  explicit DualNonConvergence(const std::string& msg) : Error("weights", "DualNonConvergence", msg) {}
};

// estimator / simulation

class TooManyFailures : public Error {
 public:
  TooManyFailures(std::string module, const std::string& msg)
      : Error(std::move(module), "TooManyFailures", msg) {}
};

class BracketError : public Error {
 public:
  explicit BracketError(const std::string& msg) : Error("simulation", "BracketError", msg) {}
};

// diagnostics

class ConstantCovariate : public Error {
 public:
  explicit ConstantCovariate(const std::string& name)
      : Error("diagnostics", "ConstantCovariate", "covariate '" + name + "' has zero standard deviation") {}
};

// cli-io

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& msg) : Error("cli-io", "SchemaError", msg) {}
};

class CsvParseError : public Error {
 public:
  CsvParseError(std::size_t row, std::string column, const std::string& cell)
      : Error("cli-io", "ParseError",
              "cannot parse '" + cell + "' in column '" + column + "' at row " + std::to_string(row)),
        row_(row),
        column_(std::move(column)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("cli-io", "ConfigError", msg) {}
};

}  // namespace mrddi
