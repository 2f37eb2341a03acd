#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrddi {

using Index = Eigen::Index;

/// One level of the composite treatment: object drug `a`, precipitant `b`.
struct Arm {
  int a = 0;
  int b = 0;

  friend constexpr bool operator==(Arm, Arm) = default;
};

/// Canonical arm order used for every per-arm array and probability column:
/// (1,1), (0,1), (1,0), (0,0). The last one is the usual reference level.
inline constexpr std::array<Arm, 4> kArms{{{1, 1}, {0, 1}, {1, 0}, {0, 0}}};

constexpr std::size_t arm_index(Arm arm) {
  return static_cast<std::size_t>((1 - arm.b) * 2 + (1 - arm.a));
}

std::string arm_label(Arm arm);

/// An observed sample (Y, A, B, X). Plain value type; invariants are checked
/// by validate_dataset rather than on construction so malformed input can be
/// reported in full.
struct Dataset {
  Eigen::VectorXd outcome;
  Eigen::VectorXi treat_a;
  Eigen::VectorXi treat_b;
  Eigen::MatrixXd covariates;
  std::vector<std::string> covariate_names;

  Index n() const { return outcome.size(); }
  Index p() const { return covariates.cols(); }

  /// Column position of a covariate; throws UnknownVariable.
  Index covariate_index(std::string_view name) const;
  auto covariate(std::string_view name) const { return covariates.col(covariate_index(name)); }
};

/// Row subset (with repetition) in the given order.
Dataset take_rows(const Dataset& d, std::span<const Index> rows);

enum class Severity { warning, fatal };

struct Violation {
  Severity severity;
  std::string category;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool accepted() const;
  std::string summary() const;
};

ValidationReport validate_dataset(const Dataset& d);

/// Throws ValidationError listing every fatal violation.
void require_valid(const Dataset& d);

/// Row indices of each arm, ascending, indexed in canonical arm order.
struct ArmPartition {
  std::array<std::vector<Index>, 4> members;

  const std::vector<Index>& operator[](Arm arm) const { return members[arm_index(arm)]; }
  Index size(Arm arm) const { return static_cast<Index>((*this)[arm].size()); }
};

/// Throws EmptyArm when an arm has no members.
ArmPartition arm_partition(const Dataset& d);

}  // namespace mrddi
