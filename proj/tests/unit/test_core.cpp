#include "helpers.hpp"

#include "mrddi/core.hpp"
#include "mrddi/errors.hpp"

#include <doctest.h>

#include <limits>

using namespace mrddi;
using testing::make_dataset;

TEST_CASE("one row per arm is a valid dataset") {
  const auto d = make_dataset({0, 1, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}, {{0.1, 0.2, 0.3, 0.4}}, {"X1"});
  const auto report = validate_dataset(d);
  CHECK(report.violations.empty());
  CHECK(report.accepted());
}

TEST_CASE("treatment value 2 is a fatal non-binary violation") {
  const auto d = make_dataset({0, 1, 0, 1}, {2, 0, 1, 0}, {1, 1, 0, 0}, {{0.1, 0.2, 0.3, 0.4}}, {"X1"});
  const auto report = validate_dataset(d);
  CHECK_FALSE(report.accepted());
  bool found = false;
  for (const auto& v : report.violations) found = found || (v.category == "non-binary treatment" && v.severity == Severity::fatal);
  CHECK(found);
  CHECK_THROWS_AS(require_valid(d), ValidationError);
}

TEST_CASE("missing arm (0,0) is a fatal empty-arm violation") {
  const auto d = make_dataset({0, 1, 0}, {1, 0, 1}, {1, 1, 0}, {{0.1, 0.2, 0.3}}, {"X1"});
  const auto report = validate_dataset(d);
  bool found = false;
  for (const auto& v : report.violations) found = found || (v.category == "empty arm" && v.severity == Severity::fatal);
  CHECK(found);
}

TEST_CASE("non-finite outcome is fatal") {
  auto d = make_dataset({0, 1, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}, {{0.1, 0.2, 0.3, 0.4}}, {"X1"});
  d.outcome(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(validate_dataset(d).accepted());
}

TEST_CASE("arm partition with two rows leaves empty arms") {
  const auto d = make_dataset({0, 0}, {1, 0}, {1, 0}, {{1, 2}}, {"X1"});
  CHECK_THROWS_AS(arm_partition(d), EmptyArm);
}

TEST_CASE("arm partition of four singleton arms") {
  const auto d = make_dataset({0, 0, 0, 0}, {1, 1, 0, 0}, {1, 0, 1, 0}, {{1, 2, 3, 4}}, {"X1"});
  const auto part = arm_partition(d);
  CHECK(part[Arm{1, 1}] == std::vector<Index>{0});
  CHECK(part[Arm{1, 0}] == std::vector<Index>{1});
  CHECK(part[Arm{0, 1}] == std::vector<Index>{2});
  CHECK(part[Arm{0, 0}] == std::vector<Index>{3});
}

TEST_CASE("arm partition with an empty (1,1) arm throws") {
  const auto d = make_dataset({0, 0, 0, 0}, {0, 0, 0, 1}, {1, 1, 0, 0}, {{1, 2, 3, 4}}, {"X1"});
  CHECK_THROWS_AS(arm_partition(d), EmptyArm);
}

TEST_CASE("canonical arm indices") {
  CHECK(arm_index({1, 1}) == 0);
  CHECK(arm_index({0, 1}) == 1);
  CHECK(arm_index({1, 0}) == 2);
  CHECK(arm_index({0, 0}) == 3);
  CHECK(arm_label({0, 1}) == "(0,1)");
}

TEST_CASE("take_rows repeats rows in order") {
  const auto d = make_dataset({1, 2, 3}, {1, 0, 1}, {0, 1, 1}, {{10, 20, 30}}, {"X1"});
  const std::vector<Index> rows{2, 2, 0};
  const auto r = take_rows(d, rows);
  CHECK(r.n() == 3);
  CHECK(r.outcome(0) == 3);
  CHECK(r.outcome(1) == 3);
  CHECK(r.covariates(2, 0) == 10);
  CHECK(r.covariate_names == d.covariate_names);
}

TEST_CASE("unknown covariate name throws") {
  const auto d = make_dataset({1}, {1}, {0}, {{10}}, {"X1"});
  CHECK_THROWS_AS(d.covariate_index("X9"), UnknownVariable);
}
