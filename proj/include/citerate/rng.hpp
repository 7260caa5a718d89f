#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace citerate {

/// Deterministic random stream with hand-rolled variate transforms.
///
/// All transforms are implemented explicitly (polar normal, Marsaglia-Tsang
/// gamma, Hoermann PTRD Poisson) rather than through std:: distributions,
/// whose algorithms are implementation-defined.  Two streams built from the
/// same (seed, stream) pair therefore produce identical draw sequences on
/// any platform.  One stream per chain/thread; never shared.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t raw() { return gen_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);

  double normal();  // standard normal, polar method
  double normal(double mean, double sd);

  double exponential(double mean);
  double gamma(double shape, double rate);
  double beta(double a, double b);
  double beta_proportion(double mu, double kappa);
  double cauchy(double loc, double scale);
  double half_cauchy(double scale);

  long poisson(double lambda);
  long negbin2(double mu, double phi);
  long zinb(double gate, double mu, double phi);

  /// Symmetric Dirichlet with concentration alpha on each component.
  void dirichlet_symmetric(double alpha, std::span<double> out);

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace citerate
