#include "citerate/dists.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "citerate/errors.hpp"

namespace citerate::dists {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kLogTwo = 0.6931471805599453094;
constexpr double kLogSqrtTwoPi = 0.9189385332046727418;

void require_positive(double v, const char* name, const char* fn) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << fn << ": parameter '" << name << "' must be positive and finite, got " << v;
    throw std::domain_error(os.str());
  }
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double negbin2_logpmf(long n, double mu, double phi) {
  require_positive(mu, "mu", "negbin2_logpmf");
  require_positive(phi, "phi", "negbin2_logpmf");
  if (n < 0) throw std::domain_error("negbin2_logpmf: count n must be non-negative");
  const double nd = static_cast<double>(n);
  const double log_mu_frac = std::log(mu) - std::log(mu + phi);
  const double log_phi_frac = std::log(phi) - std::log(mu + phi);
  return std::lgamma(nd + phi) - std::lgamma(phi) - std::lgamma(nd + 1.0) +
         nd * log_mu_frac + phi * log_phi_frac;
}

double zinb_logpmf(long n, double gate, double mu, double phi) {
  if (!(gate >= 0.0 && gate <= 1.0)) {
    std::ostringstream os;
    os << "zinb_logpmf: parameter 'gate' must lie in [0,1], got " << gate;
    throw std::domain_error(os.str());
  }
  if (n == 0) {
    if (gate == 1.0) return 0.0;
    const double log_nb0 = negbin2_logpmf(0, mu, phi);
    if (gate == 0.0) return log_nb0;
    return log_sum_exp(std::log(gate), std::log1p(-gate) + log_nb0);
  }
  if (gate == 1.0) return kNegInf;
  const double base = negbin2_logpmf(n, mu, phi);
  return (gate == 0.0) ? base : std::log1p(-gate) + base;
}

double beta_proportion_logpdf(double theta, double mu, double kappa) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw std::domain_error("beta_proportion_logpdf: parameter 'mu' must lie in (0,1)");
  }
  require_positive(kappa, "kappa", "beta_proportion_logpdf");
  if (!(theta >= 0.0 && theta <= 1.0)) return kNegInf;
  const double a = mu * kappa;
  const double b = (1.0 - mu) * kappa;
  if (theta == 0.0 || theta == 1.0) {
    // Density diverges or vanishes at the boundary depending on the shapes;
    // either way report -inf rather than NaN so callers can probe edges.
    return kNegInf;
  }
  return (a - 1.0) * std::log(theta) + (b - 1.0) * std::log1p(-theta) - log_beta(a, b);
}

double prior_logpdf(const DistParams& d, double x) {
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal: {
      require_positive(p[1], "sd", "prior_logpdf[normal]");
      const double z = (x - p[0]) / p[1];
      return -0.5 * z * z - std::log(p[1]) - kLogSqrtTwoPi;
    }
    case Family::Cauchy: {
      require_positive(p[1], "scale", "prior_logpdf[cauchy]");
      const double z = (x - p[0]) / p[1];
      return -kLogPi - std::log(p[1]) - std::log1p(z * z);
    }
    case Family::HalfCauchy: {
      require_positive(p[0], "scale", "prior_logpdf[half_cauchy]");
      if (x < 0.0) return kNegInf;
      const double z = x / p[0];
      return kLogTwo - kLogPi - std::log(p[0]) - std::log1p(z * z);
    }
    case Family::Gamma: {
      require_positive(p[0], "shape", "prior_logpdf[gamma]");
      require_positive(p[1], "rate", "prior_logpdf[gamma]");
      if (x < 0.0) return kNegInf;
      if (x == 0.0) return (p[0] == 1.0) ? std::log(p[1]) : kNegInf;
      return p[0] * std::log(p[1]) - std::lgamma(p[0]) + (p[0] - 1.0) * std::log(x) -
             p[1] * x;
    }
    case Family::Beta: {
      require_positive(p[0], "a", "prior_logpdf[beta]");
      require_positive(p[1], "b", "prior_logpdf[beta]");
      if (!(x >= 0.0 && x <= 1.0)) return kNegInf;
      if (x == 0.0 || x == 1.0) return kNegInf;
      return (p[0] - 1.0) * std::log(x) + (p[1] - 1.0) * std::log1p(-x) -
             log_beta(p[0], p[1]);
    }
    case Family::BetaProportion:
      return beta_proportion_logpdf(x, p[0], p[1]);
    case Family::Uniform01:
      return (x >= 0.0 && x <= 1.0) ? 0.0 : kNegInf;
    case Family::Exponential: {
      require_positive(p[0], "mean", "prior_logpdf[exponential]");
      if (x < 0.0) return kNegInf;
      return -std::log(p[0]) - x / p[0];
    }
    case Family::NegBinomial2:
      return negbin2_logpmf(static_cast<long>(std::llround(x)), p[0], p[1]);
    case Family::Zinb:
      return zinb_logpmf(static_cast<long>(std::llround(x)), p[0], p[1], p[2]);
    case Family::Dirichlet:
      throw config_error("prior_logpdf: Dirichlet requires the vector overload");
  }
  throw config_error("prior_logpdf: unsupported family");
}

double prior_logpdf(const DistParams& d, std::span<const double> x) {
  if (d.family == Family::Dirichlet) {
    const double alpha = d.params[0];
    const auto k = static_cast<std::size_t>(d.params[1]);
    require_positive(alpha, "alpha", "prior_logpdf[dirichlet]");
    if (x.size() != k) throw config_error("prior_logpdf: Dirichlet dimension mismatch");
    double sum = 0.0, lp = std::lgamma(alpha * static_cast<double>(k)) -
                           static_cast<double>(k) * std::lgamma(alpha);
    for (double xi : x) {
      if (!(xi > 0.0 && xi < 1.0)) return kNegInf;
      lp += (alpha - 1.0) * std::log(xi);
      sum += xi;
    }
    if (std::abs(sum - 1.0) > 1e-8) return kNegInf;
    return lp;
  }
  double lp = 0.0;
  for (double xi : x) lp += prior_logpdf(d, xi);
  return lp;
}

double sample(const DistParams& d, RngStream& rng) {
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal:
      return rng.normal(p[0], p[1]);
    case Family::Cauchy:
      return rng.cauchy(p[0], p[1]);
    case Family::HalfCauchy:
      return rng.half_cauchy(p[0]);
    case Family::Gamma:
      return rng.gamma(p[0], p[1]);
    case Family::Beta:
      return rng.beta(p[0], p[1]);
    case Family::BetaProportion:
      return rng.beta_proportion(p[0], p[1]);
    case Family::Uniform01:
      return rng.uniform();
    case Family::Exponential:
      return rng.exponential(p[0]);
    case Family::NegBinomial2:
      return static_cast<double>(rng.negbin2(p[0], p[1]));
    case Family::Zinb:
      return static_cast<double>(rng.zinb(p[0], p[1], p[2]));
    case Family::Dirichlet:
      throw config_error("sample: Dirichlet requires the vector overload");
  }
  throw config_error("sample: unsupported family");
}

void sample(const DistParams& d, RngStream& rng, std::span<double> out) {
  if (d.family != Family::Dirichlet)
    throw config_error("sample(span): only Dirichlet is vector-valued");
  if (out.size() != static_cast<std::size_t>(d.params[1]))
    throw config_error("sample: Dirichlet dimension mismatch");
  rng.dirichlet_symmetric(d.params[0], out);
}

const char* family_name(Family f) {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::Cauchy: return "cauchy";
    case Family::HalfCauchy: return "half_cauchy";
    case Family::Gamma: return "gamma";
    case Family::Beta: return "beta";
    case Family::BetaProportion: return "beta_proportion";
    case Family::Uniform01: return "uniform01";
    case Family::Exponential: return "exponential";
    case Family::Dirichlet: return "dirichlet";
    case Family::NegBinomial2: return "negbinomial2";
    case Family::Zinb: return "zinb";
  }
  return "unknown";
}

}  // namespace citerate::dists
