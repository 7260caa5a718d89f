#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "citerate/dists.hpp"
#include "citerate/errors.hpp"
#include "citerate/rng.hpp"
#include "testutil.hpp"

using namespace citerate;
using dists::DistParams;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double poisson_logpmf(long n, double lambda) {
  return n * std::log(lambda) - lambda - std::lgamma(n + 1.0);
}
}  // namespace

TEST_CASE("negbin2_logpmf closed-form points") {
  CHECK(dists::negbin2_logpmf(0, 1.0, 1.0) == doctest::Approx(-0.6931471805599453).epsilon(1e-12));
  CHECK(dists::negbin2_logpmf(3, 1.0, 1.0) == doctest::Approx(-2.7725887222397812).epsilon(1e-12));
  // High-precision direct evaluation, frozen and recomputed by the oracle.
  const double frozen = -4.796000721453079311889;
  CHECK(dists::negbin2_logpmf(5, 438.0, 0.5) == doctest::Approx(frozen).epsilon(1e-12));
  CHECK(testutil::nb2_logpmf_reference(5, 438.0, 0.5) == doctest::Approx(frozen).epsilon(1e-14));
}

TEST_CASE("negbin2_logpmf domain errors name the offending parameter") {
  CHECK_THROWS_WITH_AS(dists::negbin2_logpmf(1, -1.0, 1.0),
                       doctest::Contains("'mu'"), std::domain_error);
  CHECK_THROWS_WITH_AS(dists::negbin2_logpmf(1, 1.0, 0.0),
                       doctest::Contains("'phi'"), std::domain_error);
  CHECK_THROWS_AS(dists::negbin2_logpmf(1, std::nan(""), 1.0), std::domain_error);
  CHECK_THROWS_AS(dists::negbin2_logpmf(-1, 1.0, 1.0), std::domain_error);
}

TEST_CASE("negbin2 normalizes over the support") {
  RngStream rng(811, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const double mu = std::exp(rng.uniform(std::log(0.1), std::log(1000.0)));
    const double phi = std::exp(rng.uniform(std::log(0.1), std::log(50.0)));
    const double p = mu / (mu + phi);
    double total = 0.0;
    double pmf = std::exp(dists::negbin2_logpmf(0, mu, phi));
    long n = 0;
    for (;;) {
      total += pmf;
      const double ratio = (static_cast<double>(n) + phi) / (static_cast<double>(n) + 1.0) * p;
      if (ratio < 1.0 && pmf * ratio / (1.0 - ratio) < 1e-12) break;
      ++n;
      pmf = std::exp(dists::negbin2_logpmf(n, mu, phi));
      REQUIRE(n < 5000000);
    }
    CHECK(total > 1.0 - 1e-6);
    CHECK(total < 1.0 + 1e-9);
  }
}

TEST_CASE("negbin2 approaches the Poisson limit as dispersion grows") {
  for (double mu : {0.3, 1.0, 5.0, 20.0}) {
    for (long n = 0; n <= 50; ++n) {
      const double nb = dists::negbin2_logpmf(n, mu, 1e8);
      CHECK(std::abs(nb - poisson_logpmf(n, mu)) < 1e-4);
    }
  }
}

TEST_CASE("zinb_logpmf structure") {
  CHECK(dists::zinb_logpmf(0, 1.0, 7.0, 2.0) == 0.0);
  CHECK(dists::zinb_logpmf(0, 0.5, 1.0, 1.0) ==
        doctest::Approx(-0.2876820724517809).epsilon(1e-12));
  CHECK(dists::zinb_logpmf(3, 1.0, 7.0, 2.0) == -kInf);
  CHECK_THROWS_WITH_AS(dists::zinb_logpmf(0, 1.5, 1.0, 1.0), doctest::Contains("'gate'"),
                       std::domain_error);

  // gate = 0 reduces to the plain NB2 mass.
  RngStream rng(812, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const long n = static_cast<long>(rng.uniform(0.0, 30.0));
    const double mu = std::exp(rng.uniform(-2.0, 5.0));
    const double phi = std::exp(rng.uniform(-2.0, 3.0));
    const double a = dists::zinb_logpmf(n, 0.0, mu, phi);
    const double b = dists::negbin2_logpmf(n, mu, phi);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
  }
}

TEST_CASE("zinb_logpmf matches long-run simulation frequency") {
  // gate 0.3, mu 2, phi 3 at n = 4, checked against 10^7 generative draws.
  const double expected = std::exp(dists::zinb_logpmf(4, 0.3, 2.0, 3.0));
  CHECK(dists::zinb_logpmf(4, 0.3, 2.0, 3.0) ==
        doctest::Approx(-2.846264541631114623267).epsilon(1e-12));
  RngStream rng(4711, 0);
  const long n_draws = 10'000'000;
  long hits = 0;
  for (long i = 0; i < n_draws; ++i)
    if (rng.zinb(0.3, 2.0, 3.0) == 4) ++hits;
  const double freq = static_cast<double>(hits) / static_cast<double>(n_draws);
  const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(n_draws));
  CHECK(std::abs(freq - expected) < 3.0 * se);
}

TEST_CASE("beta_proportion_logpdf") {
  // mu=0.5, kappa=2 is Beta(1,1): uniform.
  for (double theta : {0.1, 0.42, 0.9})
    CHECK(dists::beta_proportion_logpdf(theta, 0.5, 2.0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(dists::beta_proportion_logpdf(0.5, 0.5, 4.0) ==
        doctest::Approx(0.4054651081081644).epsilon(1e-12));
  // Adaptive-quadrature oracle pinned the normalizer; frozen value below.
  CHECK(dists::beta_proportion_logpdf(0.2, 0.3, 7.0) ==
        doctest::Approx(0.8646150192853468670669).epsilon(1e-12));
  CHECK(dists::beta_proportion_logpdf(0.0, 0.3, 7.0) == -kInf);
  CHECK(dists::beta_proportion_logpdf(1.0, 0.3, 7.0) == -kInf);

  // Equality with the standard Beta density (independent implementation).
  RngStream rng(813, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const double mu = rng.uniform(0.05, 0.95);
    const double kappa = std::exp(rng.uniform(-1.0, 3.0));
    const double theta = rng.uniform(0.02, 0.98);
    boost::math::beta_distribution<double> ref(mu * kappa, (1.0 - mu) * kappa);
    const double expected = std::log(boost::math::pdf(ref, theta));
    const double got = dists::beta_proportion_logpdf(theta, mu, kappa);
    CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("beta_proportion integrates to one (quadrature)") {
  // Trapezoid refinement is enough at this smoothness; the rule is
  // independent of the density implementation path being checked.
  const double mu = 0.3, kappa = 7.0;
  const int n = 200000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / n;
    const double b = static_cast<double>(i + 1) / n;
    const double fa = (i == 0) ? 0.0 : std::exp(dists::beta_proportion_logpdf(a, mu, kappa));
    const double fb = (i == n - 1) ? 0.0 : std::exp(dists::beta_proportion_logpdf(b, mu, kappa));
    integral += 0.5 * (fa + fb) / n;
  }
  CHECK(std::abs(integral - 1.0) < 1e-4);
}

TEST_CASE("prior_logpdf named priors") {
  // Gamma(100,100) at 1, frozen from the high-precision evaluator.
  CHECK(dists::prior_logpdf(DistParams::gamma(100.0, 100.0), 1.0) ==
        doctest::Approx(1.382813229233738).epsilon(1e-12));
  // Mode at (shape-1)/rate = 0.99.
  const double at_mode = dists::prior_logpdf(DistParams::gamma(100.0, 100.0), 0.99);
  CHECK(at_mode > dists::prior_logpdf(DistParams::gamma(100.0, 100.0), 0.98));
  CHECK(at_mode > dists::prior_logpdf(DistParams::gamma(100.0, 100.0), 1.0));

  CHECK(dists::prior_logpdf(DistParams::half_cauchy(1.0), 0.0) ==
        doctest::Approx(-0.4515827052894548).epsilon(1e-12));
  CHECK(dists::prior_logpdf(DistParams::half_cauchy(1.0), -0.5) == -kInf);

  const std::vector<double> simplex = {0.2, 0.5, 0.3};
  CHECK(dists::prior_logpdf(DistParams::dirichlet(1.0, 3), simplex) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Support boundaries return -inf, not errors.
  CHECK(dists::prior_logpdf(DistParams::exponential(2.0), -1.0) == -kInf);
  CHECK(dists::prior_logpdf(DistParams::beta(2.0, 3.0), 1.5) == -kInf);
  CHECK(dists::prior_logpdf(DistParams::uniform01(), 0.3) == 0.0);
}

TEST_CASE("sampler moments") {
  RngStream rng(20260301, 7);
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.gamma(100.0, 100.0);
  CHECK(std::abs(sum / n - 1.0) < 0.001);

  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.exponential(10.0 / 6.0);
  CHECK(std::abs(sum / n - 10.0 / 6.0) < 0.005);

  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.beta_proportion(0.3, 7.0);
  CHECK(std::abs(sum / n - 0.3) < 0.002);

  // Poisson over both algorithm branches (Knuth / PTRD).
  for (double lambda : {3.0, 40.0, 800.0}) {
    double s = 0.0, s2 = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
      const double x = static_cast<double>(rng.poisson(lambda));
      s += x;
      s2 += x * x;
    }
    const double mean = s / m;
    const double var = s2 / m - mean * mean;
    CHECK(std::abs(mean - lambda) < 4.0 * std::sqrt(lambda / m));
    CHECK(std::abs(var - lambda) < 0.05 * lambda);
  }
}

TEST_CASE("samplers pass Kolmogorov-Smirnov against analytic CDFs") {
  RngStream rng(99173, 3);
  const int n = 100000;
  auto run = [&](const char* name, auto draw, auto cdf) {
    std::vector<double> sample(n);
    for (int i = 0; i < n; ++i) sample[i] = draw();
    const auto res = testutil::ks_test(std::move(sample), cdf);
    INFO(name << " KS stat " << res.statistic << " p " << res.p_value);
    CHECK(res.p_value > 0.01);
  };

  boost::math::normal_distribution<double> normal01;
  run("normal", [&] { return rng.normal(); },
      [&](double x) { return boost::math::cdf(normal01, x); });
  boost::math::cauchy_distribution<double> cauchy01;
  run("cauchy", [&] { return rng.cauchy(0.0, 1.0); },
      [&](double x) { return boost::math::cdf(cauchy01, x); });
  run("half_cauchy", [&] { return rng.half_cauchy(2.0); },
      [](double x) { return x < 0.0 ? 0.0 : 2.0 / M_PI * std::atan(x / 2.0); });
  boost::math::gamma_distribution<double> gamma_dist(3.0, 1.0 / 2.0);  // shape, scale
  run("gamma", [&] { return rng.gamma(3.0, 2.0); },
      [&](double x) { return boost::math::cdf(gamma_dist, x); });
  boost::math::gamma_distribution<double> gamma_small(0.4, 1.0 / 1.5);
  run("gamma shape<1", [&] { return rng.gamma(0.4, 1.5); },
      [&](double x) { return boost::math::cdf(gamma_small, x); });
  boost::math::beta_distribution<double> beta_dist(2.0, 5.0);
  run("beta", [&] { return rng.beta(2.0, 5.0); },
      [&](double x) { return boost::math::cdf(beta_dist, x); });
  boost::math::beta_distribution<double> bp_dist(0.3 * 7.0, 0.7 * 7.0);
  run("beta_proportion", [&] { return rng.beta_proportion(0.3, 7.0); },
      [&](double x) { return boost::math::cdf(bp_dist, x); });
  boost::math::exponential_distribution<double> exp_dist(6.0 / 10.0);  // rate
  run("exponential", [&] { return rng.exponential(10.0 / 6.0); },
      [&](double x) { return boost::math::cdf(exp_dist, x); });
  run("uniform01", [&] { return rng.uniform(); },
      [](double x) { return std::clamp(x, 0.0, 1.0); });
}

TEST_CASE("dirichlet sampler and unsupported-family errors") {
  RngStream rng(5150, 0);
  std::vector<double> w(4);
  double mean0 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    rng.dirichlet_symmetric(2.0, w);
    double s = 0.0;
    for (double x : w) s += x;
    CHECK(std::abs(s - 1.0) < 1e-12);
    mean0 += w[0];
  }
  CHECK(std::abs(mean0 / 20000 - 0.25) < 0.005);

  CHECK_THROWS_AS(dists::sample(DistParams::dirichlet(1.0, 3), rng), config_error);
  std::vector<double> out(2);
  CHECK_THROWS_AS(dists::sample(DistParams::normal(0.0, 1.0), rng, out), config_error);
}

TEST_CASE("rng streams are deterministic and independent per stream id") {
  RngStream a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.raw() == b.raw());
  }
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) any_diff = any_diff || (b.raw() != c.raw());
  CHECK(any_diff);
}

