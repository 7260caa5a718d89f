#include "citerate/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace citerate {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  gen_.seed(seq);
}

double RngStream::uniform() {
  // 53-bit mantissa, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_normal_ = true;
  return u * f;
}

double RngStream::normal(double mean, double sd) { return mean + sd * normal(); }

double RngStream::exponential(double mean) { return -mean * std::log(uniform()); }

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Boost shape by one, then scale back: X(a) = X(a+1) * U^(1/a).
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia & Tsang (2000) squeeze method.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double RngStream::beta_proportion(double mu, double kappa) {
  return beta(mu * kappa, (1.0 - mu) * kappa);
}

double RngStream::cauchy(double loc, double scale) {
  return loc + scale * std::tan(M_PI * (uniform() - 0.5));
}

double RngStream::half_cauchy(double scale) { return std::abs(cauchy(0.0, scale)); }

long RngStream::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw std::domain_error("poisson: lambda must be non-negative");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    // Knuth's product-of-uniforms method.
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Hoermann (1993) PTRD transformed rejection.
  const double smu = std::sqrt(lambda);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = kf * std::log(lambda) - lambda - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<long>(kf);
  }
}

long RngStream::negbin2(double mu, double phi) {
  // Gamma-Poisson mixture: rate ~ Gamma(phi, phi/mu), count ~ Poisson(rate).
  const double rate = gamma(phi, phi / mu);
  return poisson(rate);
}

long RngStream::zinb(double gate, double mu, double phi) {
  if (uniform() < gate) return 0;
  return negbin2(mu, phi);
}

void RngStream::dirichlet_symmetric(double alpha, std::span<double> out) {
  double total = 0.0;
  for (double& x : out) {
    x = gamma(alpha, 1.0);
    total += x;
  }
  for (double& x : out) x /= total;
}

}  // namespace citerate
