#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "citerate/dists.hpp"
#include "citerate/errors.hpp"
#include "citerate/model.hpp"
#include "citerate/rng.hpp"
#include "testutil.hpp"

using namespace citerate;
using namespace citerate::model;
using testutil::big_float;

namespace {

ModelConfig science_config(int k, int t, std::vector<std::string> fields) {
  ModelConfig cfg;
  cfg.variant = Variant::Science;
  cfg.components = k;
  cfg.horizon = t;
  cfg.group_names = std::move(fields);
  return cfg;
}

PaperRecord make_record(std::string id, std::string field, Repro repro,
                        std::vector<long> counts, std::vector<char> observed) {
  PaperRecord rec;
  rec.id = std::move(id);
  rec.field = std::move(field);
  rec.repro = repro;
  rec.pub_year = 2012;
  rec.counts = std::move(counts);
  rec.observed = std::move(observed);
  return rec;
}

ConstrainedParams random_params(const ModelConfig& cfg, int n_papers, RngStream& rng) {
  const int k = cfg.components;
  ConstrainedParams p;
  p.lambda_ridge = rng.uniform(0.2, 2.0);
  p.alpha = rng.uniform(0.1, 0.9);
  p.omega_s.resize(k);
  p.omega_f.resize(k);
  rng.dirichlet_symmetric(1.0, p.omega_s);
  rng.dirichlet_symmetric(1.0, p.omega_f);
  p.style.base.resize(k);
  p.style.shift.resize(k);
  for (int i = 0; i < k; ++i) {
    p.style.base[i] = rng.uniform(0.7, 1.4);
    p.style.shift[i] = rng.uniform(0.05, 3.0);
  }
  p.beta_hat = rng.normal(0.0, 0.5);
  const int f = cfg.n_groups();
  p.beta.resize(f);
  p.bias.resize(cfg.variant == Variant::Science ? f : 1);
  for (auto& b : p.beta) b = rng.normal(0.0, 0.5);
  for (auto& b : p.bias) b = rng.normal(1.0, 0.5);
  p.gate_mu = rng.uniform(0.2, 0.8);
  p.gate_kappa = rng.uniform(0.5, 5.0);
  p.phi = rng.uniform(0.5, 5.0);
  p.gate.resize(n_papers);
  for (auto& g : p.gate) g = rng.uniform(0.05, 0.95);
  return p;
}

Dataset small_dataset(const ModelConfig& cfg, int n_papers, RngStream& rng,
                      bool random_masks = true) {
  Dataset ds;
  ds.variant = cfg.variant;
  ds.group_names = cfg.group_names;
  for (int i = 0; i < n_papers; ++i) {
    const auto& field = cfg.group_names[i % cfg.group_names.size()];
    std::vector<long> counts(cfg.horizon);
    std::vector<char> observed(cfg.horizon, 1);
    int n_obs = cfg.horizon;
    if (random_masks) n_obs = 1 + static_cast<int>(rng.uniform(0.0, cfg.horizon));
    for (int t = 0; t < cfg.horizon; ++t) {
      observed[t] = t < n_obs;
      counts[t] = rng.poisson(5.0);
    }
    ds.papers.push_back(make_record("p" + std::to_string(i), field,
                                    (i % 2 == 0) ? Repro::Success : Repro::Failure, counts,
                                    observed));
  }
  ds.finalize();
  return ds;
}

}  // namespace

TEST_CASE("stick breaking maps the origin to the uniform simplex") {
  std::vector<double> raw(3, 0.0), simplex(4);
  stick_breaking(raw, simplex);
  for (double x : simplex) CHECK(x == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("constrain examples") {
  const auto cfg = science_config(4, 3, {"Economics"});
  const auto lay = LatentLayout::create(cfg, 2);
  std::vector<double> theta(lay.dim, 0.0);
  double log_jac = 0.0;
  const ConstrainedParams p = constrain(theta, lay, &log_jac);
  // A positive-constrained coordinate at raw 0 gives exp(0) = 1 with zero
  // Jacobian contribution.
  CHECK(p.lambda_ridge == 1.0);
  CHECK(p.phi == 1.0);
  for (double x : p.omega_s) CHECK(x == doctest::Approx(0.25).epsilon(1e-14));
  for (double x : p.omega_f) CHECK(x == doctest::Approx(0.25).epsilon(1e-14));

  std::vector<double> bad(lay.dim + 1, 0.0);
  CHECK_THROWS_WITH_AS(constrain(bad, lay, nullptr), doctest::Contains("does not match"),
                       config_error);
}

TEST_CASE("constrain round-trips and keeps simplexes normalized") {
  RngStream rng(321, 0);
  const auto cfg = science_config(5, 4, {"Economics", "Social"});
  const int n_papers = 3;
  const auto lay = LatentLayout::create(cfg, n_papers);
  for (int rep = 0; rep < 100; ++rep) {
    const ConstrainedParams p = random_params(cfg, n_papers, rng);
    const auto theta = unconstrain(p, lay);
    const ConstrainedParams q = constrain(theta, lay, nullptr);
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-10 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    CHECK(close(q.lambda_ridge, p.lambda_ridge));
    CHECK(close(q.alpha, p.alpha));
    for (int k = 0; k < cfg.components; ++k) {
      CHECK(close(q.omega_s[k], p.omega_s[k]));
      CHECK(close(q.omega_f[k], p.omega_f[k]));
      CHECK(close(q.style.base[k], p.style.base[k]));
      CHECK(close(q.style.shift[k], p.style.shift[k]));
    }
    CHECK(close(q.beta_hat, p.beta_hat));
    for (std::size_t j = 0; j < p.beta.size(); ++j) CHECK(close(q.beta[j], p.beta[j]));
    CHECK(close(q.gate_mu, p.gate_mu));
    CHECK(close(q.gate_kappa, p.gate_kappa));
    CHECK(close(q.phi, p.phi));
    for (int i = 0; i < n_papers; ++i) CHECK(close(q.gate[i], p.gate[i]));
    const double sum_s = std::accumulate(q.omega_s.begin(), q.omega_s.end(), 0.0);
    const double sum_f = std::accumulate(q.omega_f.begin(), q.omega_f.end(), 0.0);
    CHECK(std::abs(sum_s - 1.0) < 1e-12);
    CHECK(std::abs(sum_f - 1.0) < 1e-12);
  }
}

TEST_CASE("constrain log-Jacobian matches the finite-difference determinant") {
  RngStream rng(322, 0);
  const auto cfg = science_config(3, 3, {"Economics", "Social"});
  const int n_papers = 2;
  const auto lay = LatentLayout::create(cfg, n_papers);

  // Free coordinates of the constrained space: simplexes contribute their
  // first K-1 entries (the last is determined).
  auto free_coords = [&](std::span<const double> theta) {
    const ConstrainedParams p = constrain(theta, lay, nullptr);
    std::vector<double> v;
    v.push_back(p.lambda_ridge);
    v.push_back(p.alpha);
    for (int k = 0; k + 1 < cfg.components; ++k) v.push_back(p.omega_s[k]);
    for (int k = 0; k + 1 < cfg.components; ++k) v.push_back(p.omega_f[k]);
    for (double x : p.style.base) v.push_back(x);
    for (double x : p.style.shift) v.push_back(x);
    v.push_back(p.beta_hat);
    for (double x : p.beta) v.push_back(x);
    for (double x : p.bias) v.push_back(x);
    v.push_back(p.gate_mu);
    v.push_back(p.gate_kappa);
    v.push_back(p.phi);
    for (double x : p.gate) v.push_back(x);
    return v;
  };

  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> theta(lay.dim);
    for (auto& t : theta) t = rng.normal(0.0, 0.6);
    double log_jac = 0.0;
    constrain(theta, lay, &log_jac);
    const double fd = testutil::fd_log_abs_det_jacobian(free_coords, theta);
    CHECK(std::abs(fd - log_jac) < 1e-5 * std::max(1.0, std::abs(log_jac)));
  }
}

TEST_CASE("linear predictor") {
  const auto cfg = science_config(2, 3, {"Economics", "Medicine"});
  RngStream rng(1, 0);
  auto ds = small_dataset(cfg, 2, rng, false);
  ConstrainedParams p = random_params(cfg, 2, rng);
  p.beta = {0.5, 0.34};
  p.bias = {1.3, 2.0};

  ds.papers[0].repro = Repro::Failure;  // Economics
  ds.papers[1].repro = Repro::Success;  // Medicine
  ds.papers[1].field = "Medicine";
  ds.finalize();
  CHECK(linear_predictor(ds.papers[0], p, cfg) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(linear_predictor(ds.papers[1], p, cfg) == doctest::Approx(2.34).epsilon(1e-15));

  PaperRecord bad = ds.papers[0];
  bad.field = "Astrology";
  bad.group_index = -1;
  CHECK_THROWS_WITH_AS(linear_predictor(bad, p, cfg), doctest::Contains("Astrology"),
                       data_error);

  // ML variant: a unit feature vector picks out a single coefficient.
  ModelConfig ml;
  ml.variant = Variant::Ml;
  ml.components = 2;
  ml.horizon = 3;
  ml.group_names = {"reproducible", "code_available"};
  ConstrainedParams pm = p;
  pm.beta = {0.61, 0.466};
  pm.bias = {0.0};
  PaperRecord rec = ds.papers[0];
  rec.features = {0.0, 1.0};
  CHECK(linear_predictor(rec, pm, ml) == doctest::Approx(0.466).epsilon(1e-15));
}

TEST_CASE("paper_loglik_given_style") {
  const auto cfg = science_config(2, 3, {"Economics"});
  RngStream rng(7, 0);
  auto ds = small_dataset(cfg, 1, rng, false);
  ds.papers[0].counts = {2, 0, 5};
  ds.papers[0].observed = {1, 1, 1};
  ConstrainedParams p = random_params(cfg, 1, rng);
  p.bias = {std::log(4.0)};
  p.beta = {0.0};
  p.gate = {0.2};
  p.phi = 2.0;

  SUBCASE("base 1 is the identity multiplier") {
    p.style.base = {1.0, 1.0};
    p.style.shift = {0.5, 0.5};
    double expected = 0.0;
    for (int t = 0; t < 3; ++t)
      expected += dists::zinb_logpmf(ds.papers[0].counts[t], 0.2, 4.0, 2.0);
    CHECK(paper_loglik_given_style(ds.papers[0], 0, p, cfg) ==
          doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("fully masked paper contributes exactly zero") {
    ds.papers[0].observed = {0, 0, 0};
    CHECK(paper_loglik_given_style(ds.papers[0], 0, p, cfg) == 0.0);
  }

  SUBCASE("shifted base applies from the kink onward") {
    // T=3, shift 1.5, base 2, mu 4: exponents max(t-1.5, 0) = (0, 0, 0.5),
    // so the rates are (4, 4, 4*2^0.5).
    p.style.base = {2.0, 1.0};
    p.style.shift = {1.5, 0.0};
    double expected = dists::zinb_logpmf(2, 0.2, 4.0, 2.0) +
                      dists::zinb_logpmf(0, 0.2, 4.0, 2.0) +
                      dists::zinb_logpmf(5, 0.2, 4.0 * std::pow(2.0, 0.5), 2.0);
    CHECK(paper_loglik_given_style(ds.papers[0], 0, p, cfg) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("collapsed_loglik against the probability-space brute force") {
  RngStream rng(1234, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
    const int t = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
    const auto cfg = science_config(k, t, {"Economics", "Social"});
    auto ds = small_dataset(cfg, 1, rng);
    const ConstrainedParams p = random_params(cfg, 1, rng);
    const auto& rec = ds.papers[0];

    // Mixture sum computed directly in probability space with extended
    // precision, using the high-precision NB2 oracle.
    big_float mix = 0;
    const auto& omega = rec.success() ? p.omega_s : p.omega_f;
    for (int kk = 0; kk < k; ++kk) {
      big_float lik = 1;
      for (int tt = 0; tt < t; ++tt) {
        if (!rec.observed[tt]) continue;
        const double e = std::max(static_cast<double>(tt) - p.style.shift[kk], 0.0);
        const double mu =
            std::exp(linear_predictor(rec, p, cfg)) * std::pow(p.style.base[kk], e);
        big_float pmf =
            (big_float(1) - p.gate[rec.index]) *
            exp(big_float(testutil::nb2_logpmf_reference(rec.counts[tt], mu, p.phi)));
        if (rec.counts[tt] == 0) pmf += big_float(p.gate[rec.index]);
        lik *= pmf;
      }
      mix += big_float(omega[kk]) * lik;
    }
    const double expected = static_cast<double>(log(mix));
    const double got = collapsed_loglik(rec, p, cfg);
    CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("collapsed_loglik degenerate cases") {
  RngStream rng(99, 0);
  const auto cfg1 = science_config(1, 3, {"Economics"});
  auto ds = small_dataset(cfg1, 1, rng);
  ConstrainedParams p = random_params(cfg1, 1, rng);
  CHECK(collapsed_loglik(ds.papers[0], p, cfg1) ==
        doctest::Approx(paper_loglik_given_style(ds.papers[0], 0, p, cfg1)).epsilon(1e-13));

  // All styles identical: the mixture collapses regardless of the weights.
  const auto cfg3 = science_config(3, 3, {"Economics"});
  auto ds3 = small_dataset(cfg3, 1, rng);
  ConstrainedParams p3 = random_params(cfg3, 1, rng);
  p3.style.base = {1.1, 1.1, 1.1};
  p3.style.shift = {0.7, 0.7, 0.7};
  CHECK(collapsed_loglik(ds3.papers[0], p3, cfg3) ==
        doctest::Approx(paper_loglik_given_style(ds3.papers[0], 0, p3, cfg3))
            .epsilon(1e-12));
}

TEST_CASE("joint_log_density masking invariance is exact") {
  RngStream rng(555, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto cfg = science_config(2, 4, {"Economics", "Social"});
    auto ds = small_dataset(cfg, 3, rng);
    const auto lay = LatentLayout::create(cfg, 3);
    const auto theta = unconstrain(random_params(cfg, 3, rng), lay);
    const double before = joint_log_density(theta, ds, cfg);

    bool changed_any = false;
    for (auto& rec : ds.papers)
      for (int t = 0; t < cfg.horizon; ++t)
        if (!rec.observed[t]) {
          rec.counts[t] = static_cast<long>(rng.uniform(0.0, 1000.0));
          changed_any = true;
        }
    const double after = joint_log_density(theta, ds, cfg);
    CHECK(before == after);  // bit-identical
    if (rep == 0) CHECK(changed_any);
  }
}

TEST_CASE("joint_log_density equals a term-by-term independent summation") {
  RngStream rng(717, 0);
  const auto cfg = science_config(2, 3, {"Economics", "Social"});
  auto ds = small_dataset(cfg, 2, rng);
  const auto lay = LatentLayout::create(cfg, 2);
  const ConstrainedParams p = random_params(cfg, 2, rng);
  const auto theta = unconstrain(p, lay);

  // Priors written out one line per Algorithm statement.
  using dists::DistParams;
  using dists::prior_logpdf;
  double expected = 0.0;
  expected += prior_logpdf(DistParams::half_cauchy(1.0), p.lambda_ridge);
  expected += prior_logpdf(DistParams::beta(1.0, 10.0), p.alpha);
  expected += prior_logpdf(DistParams::dirichlet(p.alpha, 2),
                           std::span<const double>(p.omega_s));
  expected += prior_logpdf(DistParams::dirichlet(p.alpha, 2),
                           std::span<const double>(p.omega_f));
  for (int k = 0; k < 2; ++k) {
    expected += prior_logpdf(DistParams::gamma(100.0, 100.0), p.style.base[k]);
    expected += prior_logpdf(DistParams::exponential(3.0 / 6.0), p.style.shift[k]);
  }
  expected += prior_logpdf(DistParams::normal(0.0, 1.0), p.beta_hat);
  for (double b : p.beta)
    expected += prior_logpdf(DistParams::normal(p.beta_hat, std::sqrt(p.lambda_ridge)), b);
  for (double b : p.bias) expected += prior_logpdf(DistParams::cauchy(0.0, 1.0), b);
  expected += prior_logpdf(DistParams::uniform01(), p.gate_mu);
  expected += prior_logpdf(DistParams::gamma(1.0, 20.0), p.gate_kappa);
  expected += prior_logpdf(DistParams::half_cauchy(5.0), p.phi);
  for (double g : p.gate) expected += dists::beta_proportion_logpdf(g, p.gate_mu, p.gate_kappa);
  for (const auto& rec : ds.papers) expected += collapsed_loglik(rec, p, cfg);
  double log_jac = 0.0;
  constrain(theta, lay, &log_jac);
  expected += log_jac;

  CHECK(joint_log_density(theta, ds, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("per-paper gates are independent in the likelihood") {
  RngStream rng(31, 0);
  const auto cfg = science_config(2, 3, {"Economics"});
  auto ds = small_dataset(cfg, 2, rng);
  ConstrainedParams p = random_params(cfg, 2, rng);
  const double b_before = collapsed_loglik(ds.papers[1], p, cfg);
  p.gate[0] = 0.9 * p.gate[0];
  CHECK(collapsed_loglik(ds.papers[1], p, cfg) == b_before);
}

TEST_CASE("likelihood of an all-zero paper is non-decreasing in the gate") {
  RngStream rng(32, 0);
  const auto cfg = science_config(3, 4, {"Economics"});
  auto ds = small_dataset(cfg, 1, rng, false);
  for (int t = 0; t < cfg.horizon; ++t) ds.papers[0].counts[t] = 0;
  ConstrainedParams p = random_params(cfg, 1, rng);
  double prev = -1e300;
  for (int i = 0; i < 50; ++i) {
    p.gate[0] = 0.01 + 0.97 * i / 49.0;
    const double ll = collapsed_loglik(ds.papers[0], p, cfg);
    CHECK(ll >= prev);
    prev = ll;
  }
}

TEST_CASE("prior-only density for an empty dataset") {
  const auto cfg = science_config(2, 3, {"Economics"});
  Dataset ds;
  ds.variant = Variant::Science;
  ds.group_names = cfg.group_names;
  ds.finalize();
  const auto lay = LatentLayout::create(cfg, 0);
  std::vector<double> theta(lay.dim, 0.1);
  const double v = joint_log_density(theta, ds, cfg);
  CHECK(std::isfinite(v));
}

TEST_CASE("prior_predictive basics") {
  ModelConfig cfg = science_config(3, 5, {"Economics", "Social"});
  std::vector<DesignRow> design;
  for (int i = 0; i < 6; ++i) {
    DesignRow row;
    row.field = cfg.group_names[i % 2];
    row.repro = (i % 2 == 0) ? Repro::Success : Repro::Failure;
    row.observed.assign(5, 1);
    design.push_back(row);
  }
  RngStream rng(606, 0);
  auto [ds, truth] = prior_predictive(cfg, design, rng);
  CHECK(ds.size() == 6);
  CHECK(truth.gate.size() == 6);

  // Forced structural zeros produce all-zero counts.
  ConstrainedParams forced = truth;
  for (auto& g : forced.gate) g = 1.0;
  RngStream rng2(607, 0);
  const Dataset zeros = simulate_from_truth(forced, design, cfg, rng2);
  for (const auto& rec : zeros.papers)
    for (long c : rec.counts) CHECK(c == 0);
}

TEST_CASE("prior_predictive moment checks against the generative story") {
  // base 1, shift 0, huge dispersion, zero gates: counts are Poisson(mu_i).
  ModelConfig cfg = science_config(2, 3, {"Economics"});
  RngStream rng(608, 0);
  ConstrainedParams truth = random_params(cfg, 2, rng);
  truth.style.base = {1.0, 1.0};
  truth.style.shift = {0.0, 0.0};
  truth.phi = 1e8;
  truth.gate = {0.0, 0.0};
  truth.beta = {0.34};
  truth.bias = {std::log(6.0)};

  std::vector<DesignRow> design(2);
  design[0].field = "Economics";
  design[0].repro = Repro::Success;
  design[0].observed.assign(3, 1);
  design[1].field = "Economics";
  design[1].repro = Repro::Failure;
  design[1].observed.assign(3, 1);

  double sum_s = 0.0, sum_f = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const Dataset ds = simulate_from_truth(truth, design, cfg, rng);
    sum_s += static_cast<double>(ds.papers[0].counts[0]);
    sum_f += static_cast<double>(ds.papers[1].counts[0]);
  }
  const double mean_s = sum_s / reps, mean_f = sum_f / reps;
  // Failure-group mean ~ mu = 6 within 2%; the Success/Failure ratio at t=0
  // recovers exp(beta) = exp(0.34).
  CHECK(std::abs(mean_f - 6.0) < 0.12);
  CHECK(std::abs(mean_s / mean_f - std::exp(0.34)) < 0.05);
}

TEST_CASE("simulate_from_truth requires a non-empty design") {
  ModelConfig cfg = science_config(2, 3, {"Economics"});
  RngStream rng(1, 0);
  const ConstrainedParams p = random_params(cfg, 0, rng);
  CHECK_THROWS_AS(simulate_from_truth(p, {}, cfg, rng), config_error);
}
