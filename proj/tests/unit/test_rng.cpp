#include "mrddi/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace mrddi;

TEST_CASE("streams are reproducible and separated by stage and run") {
  Rng a(7, 3, Stage::bootstrap), b(7, 3, Stage::bootstrap), c(7, 3, Stage::outcome), e(7, 4, Stage::bootstrap);
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  CHECK(x != e.uniform());
}

TEST_CASE("variate moments") {
  Rng rng(11, 0, Stage::check);
  const int n = 400000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential();
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("index stays in range") {
  Rng rng(5, 0, Stage::check);
  for (int i = 0; i < 10000; ++i) CHECK(rng.index(7) < 7);
}
