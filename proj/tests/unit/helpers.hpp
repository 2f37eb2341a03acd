#pragma once

#include "mrddi/core.hpp"
#include "mrddi/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace testing {

inline mrddi::Dataset make_dataset(std::vector<double> y, std::vector<int> a, std::vector<int> b,
                                   std::vector<std::vector<double>> columns, std::vector<std::string> names) {
  mrddi::Dataset d;
  const auto n = static_cast<Eigen::Index>(y.size());
  d.outcome = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  d.treat_a = Eigen::Map<Eigen::VectorXi>(a.data(), n);
  d.treat_b = Eigen::Map<Eigen::VectorXi>(b.data(), n);
  d.covariates.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    d.covariates.col(static_cast<Eigen::Index>(k)) = Eigen::Map<Eigen::VectorXd>(columns[k].data(), n);
  }
  d.covariate_names = std::move(names);
  return d;
}

/// Root of a monotone function on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// K = 1 dual root: sum g_i / (1 + rho g_i) = 0 over the feasible interval.
inline double dual_root_k1(const std::vector<double>& g) {
  double lo = -1e300, hi = 1e300;
  for (double v : g) {
    if (v > 0) lo = std::max(lo, -1.0 / v);
    if (v < 0) hi = std::min(hi, -1.0 / v);
  }
  const double pad = 1e-14 * (hi - lo);
  auto f = [&](double rho) {
    double s = 0;
    for (double v : g) s += v / (1 + rho * v);
    return s;
  };
  return bisect(f, lo + pad, hi - pad);
}

/// Confounder-free data: A, B, X and Y all independent.
inline mrddi::Dataset null_dataset(Eigen::Index n, std::uint64_t seed, int p = 3) {
  mrddi::Rng rng(seed, 0, mrddi::Stage::check);
  mrddi::Dataset d;
  d.outcome.resize(n);
  d.treat_a.resize(n);
  d.treat_b.resize(n);
  d.covariates.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.treat_a(i) = rng.bernoulli(0.5);
    d.treat_b(i) = rng.bernoulli(0.4);
    for (int k = 0; k < p; ++k) d.covariates(i, k) = rng.normal();
    d.outcome(i) = rng.bernoulli(0.3);
  }
  for (int k = 0; k < p; ++k) d.covariate_names.push_back("X" + std::to_string(k + 1));
  return d;
}

}  // namespace testing
