#pragma once

#include <span>
#include <string>
#include <vector>

#include "citerate/rng.hpp"

namespace citerate::dists {

enum class Family {
  Normal,          // mean, sd
  Cauchy,          // location, scale
  HalfCauchy,      // scale; support [0, inf)
  Gamma,           // shape, rate
  Beta,            // a, b
  BetaProportion,  // mean in (0,1), concentration > 0
  Uniform01,       // no parameters
  Exponential,     // mean
  Dirichlet,       // symmetric concentration, dimension K
  NegBinomial2,    // mean, dispersion
  Zinb,            // gate, mean, dispersion
};

/// A distribution family plus its parameter vector.  Gamma is shape-rate;
/// Exponential is parameterized by its mean (so a positive-truncated
/// Laplace(0, b) is exactly Exponential with mean b); half distributions
/// are twice the symmetric density on [0, inf).
struct DistParams {
  Family family;
  std::vector<double> params;

  static DistParams normal(double mean, double sd) { return {Family::Normal, {mean, sd}}; }
  static DistParams cauchy(double loc, double scale) { return {Family::Cauchy, {loc, scale}}; }
  static DistParams half_cauchy(double scale) { return {Family::HalfCauchy, {scale}}; }
  static DistParams gamma(double shape, double rate) { return {Family::Gamma, {shape, rate}}; }
  static DistParams beta(double a, double b) { return {Family::Beta, {a, b}}; }
  static DistParams beta_proportion(double mu, double kappa) {
    return {Family::BetaProportion, {mu, kappa}};
  }
  static DistParams uniform01() { return {Family::Uniform01, {}}; }
  static DistParams exponential(double mean) { return {Family::Exponential, {mean}}; }
  static DistParams dirichlet(double alpha, int k) {
    return {Family::Dirichlet, {alpha, static_cast<double>(k)}};
  }
  static DistParams negbin2(double mu, double phi) { return {Family::NegBinomial2, {mu, phi}}; }
  static DistParams zinb(double gate, double mu, double phi) {
    return {Family::Zinb, {gate, mu, phi}};
  }
};

/// log NegBinomial2(n | mu, phi) with the binomial coefficient generalized
/// through log-gamma, so non-integer dispersion is exact:
///   lgamma(n+phi) - lgamma(phi) - lgamma(n+1)
///     + n*log(mu/(mu+phi)) + phi*log(phi/(mu+phi))
/// Throws std::domain_error naming the offending parameter when mu or phi
/// is non-positive or non-finite.
double negbin2_logpmf(long n, double mu, double phi);

/// Zero-inflated NegBinomial2 log-mass.  `gate` is the structural-zero
/// probability: n == 0 mixes the gate with NB2(0) through log-sum-exp,
/// n > 0 adds log(1-gate).  gate==1 with n>0 yields -inf (valid, not an
/// error); gate outside [0,1] is a domain error.
double zinb_logpmf(long n, double gate, double mu, double phi);

/// log BetaProportion(theta | mu, kappa): Beta with shapes (mu*kappa,
/// (1-mu)*kappa).  Boundary theta in {0,1} returns -inf instead of NaN.
double beta_proportion_logpdf(double theta, double mu, double kappa);

/// Normalized log-density of `d` at x.  x outside the support returns -inf
/// (not an error); invalid parameters throw std::domain_error.
double prior_logpdf(const DistParams& d, double x);

/// Vector overload for Dirichlet (x must be a K-simplex) and, for
/// convenience, any scalar family applied elementwise (sum of logs).
double prior_logpdf(const DistParams& d, std::span<const double> x);

/// One draw from a scalar family.  Unsupported vector family -> config_error.
double sample(const DistParams& d, RngStream& rng);

/// Dirichlet draw (out.size() must equal K).
void sample(const DistParams& d, RngStream& rng, std::span<double> out);

const char* family_name(Family f);

}  // namespace citerate::dists
