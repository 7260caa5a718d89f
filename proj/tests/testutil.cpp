#include "testutil.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace testutil {

double fd_log_abs_det_jacobian(
    const std::function<std::vector<double>(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  const std::size_t n = x.size();
  Eigen::MatrixXd jac(n, n);
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double orig = xp[j];
    xp[j] = orig + h;
    const std::vector<double> fp = f(xp);
    xp[j] = orig - h;
    const std::vector<double> fm = f(xp);
    xp[j] = orig;
    for (std::size_t i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  double log_det = 0.0;
  const auto& u = lu.matrixLU();
  for (std::size_t i = 0; i < n; ++i) log_det += std::log(std::abs(u(i, i)));
  return log_det;
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(f - lo), std::abs(f - hi)});
  }
  // Asymptotic Kolmogorov distribution with the Stephens small-sample factor.
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace testutil
