#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: a high-precision direct evaluator of the NB2 mass, adaptive
// quadrature, finite-difference derivatives, and a Kolmogorov-Smirnov test.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace testutil {

using big_float = boost::multiprecision::cpp_bin_float_50;

/// Direct high-precision evaluation of the NB2 log-mass.
inline double nb2_logpmf_reference(long n, double mu, double phi) {
  const big_float nn = n, m = mu, p = phi;
  const big_float v = boost::math::lgamma(nn + p) - boost::math::lgamma(p) -
                      boost::math::lgamma(nn + big_float(1)) +
                      nn * (log(m) - log(m + p)) + p * (log(p) - log(m + p));
  return static_cast<double>(v);
}

/// Central finite-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h = 1e-5) {
  std::vector<double> grad(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// log|det| of the finite-difference Jacobian of a map R^n -> R^n.
double fd_log_abs_det_jacobian(const std::function<std::vector<double>(std::span<const double>)>& f,
                               std::span<const double> x, double h = 1e-6);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against an analytic CDF.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace testutil
