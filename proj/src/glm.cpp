#include "citerate/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>

#include "citerate/errors.hpp"

namespace citerate::glm {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_cdf(double t, double df) {
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, t);
}

void check_full_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& colnames) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == x.cols()) return;
  // Columns beyond the first `rank` pivots are linearly dependent on the rest.
  std::ostringstream os;
  os << "design matrix is rank deficient (rank " << rank << " of " << x.cols()
     << "); collinear columns:";
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index i = rank; i < x.cols(); ++i) {
    const int col = perm[i];
    os << ' ' << (col < static_cast<int>(colnames.size()) ? colnames[col]
                                                          : std::to_string(col));
  }
  throw data_error(os.str());
}

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    ll += y[i] * std::log(mu[i]) - mu[i] - std::lgamma(y[i] + 1.0);
  return ll;
}

double nb2_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double phi) {
  double ll = 0.0;
  const double lg_phi = std::lgamma(phi);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = mu[i] + phi;
    ll += std::lgamma(y[i] + phi) - lg_phi - std::lgamma(y[i] + 1.0) +
          y[i] * (std::log(mu[i]) - std::log(v)) + phi * (std::log(phi) - std::log(v));
  }
  return ll;
}

// Squared correlation between fitted means and observations, adjusted for
// the number of fitted parameters: 1 - (1 - r^2) (n-1)/(n-p).
double adjusted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, int n_params) {
  const double n = static_cast<double>(y.size());
  const double my = y.mean(), mm = mu.mean();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    sxy += (y[i] - my) * (mu[i] - mm);
    sxx += (mu[i] - mm) * (mu[i] - mm);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const double r2 = sxy * sxy / (sxx * syy);
  if (n - n_params <= 0.0) return r2;
  return 1.0 - (1.0 - r2) * (n - 1.0) / (n - n_params);
}

// IRLS for a log-link count model.  weight_fn maps mu to the IRLS weight
// (mu for Poisson, mu/(1+mu/phi) for NB2).
template <typename WeightFn>
Eigen::VectorXd irls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, WeightFn weight_fn,
                     int* iterations) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd mu = y.array() + 0.5;
  Eigen::VectorXd eta = mu.array().log();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double last_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = weight_fn(mu[i]);
      z[i] = eta[i] + (y[i] - mu[i]) / mu[i];
    }
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    beta = (xtw * x).ldlt().solve(xtw * z);
    eta = x * beta;
    mu = eta.array().exp();
    const double ll = poisson_loglik(y, mu);  // any strictly concave surrogate works
    if (iterations) *iterations = it + 1;
    if (std::abs(ll - last_ll) < 1e-10 * (1.0 + std::abs(ll))) return beta;
    last_ll = ll;
  }
  std::ostringstream os;
  os << "IRLS did not converge after 100 iterations (last objective " << last_ll << ")";
  throw data_error(os.str());
}

template <typename WeightFn>
void wald_from_info(GlmFit& fit, const Eigen::VectorXd& mu, const Eigen::MatrixXd& x,
                    WeightFn weight_fn) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = weight_fn(mu[i]);
  const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.std_errors.resize(p);
  fit.z_scores.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.std_errors[j] = std::sqrt(std::max(cov(j, j), 0.0));
    fit.z_scores[j] = fit.coefficients[j] / fit.std_errors[j];
    fit.p_values[j] = 2.0 * normal_cdf(-std::abs(fit.z_scores[j]));
  }
}

void validate_counts(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] < 0.0) throw data_error("count regression: negative response at row " +
                                     std::to_string(i));
}

}  // namespace

GlmFit poisson_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          const std::vector<std::string>& colnames) {
  validate_counts(y);
  check_full_rank(x, colnames);
  GlmFit fit;
  fit.colnames = colnames;
  auto weight = [](double mu) { return mu; };
  fit.coefficients = irls(y, x, weight, &fit.iterations);
  const Eigen::VectorXd mu = (x * fit.coefficients).array().exp();
  wald_from_info(fit, mu, x, weight);
  fit.loglik = poisson_loglik(y, mu);
  fit.pseudo_r2 = adjusted_r2(y, mu, static_cast<int>(x.cols()));
  return fit;
}

GlmFit negbin_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                         const std::vector<std::string>& colnames) {
  validate_counts(y);
  check_full_rank(x, colnames);

  auto profile = [&](double log_phi) {
    const double phi = std::exp(log_phi);
    auto weight = [phi](double mu) { return mu / (1.0 + mu / phi); };
    const Eigen::VectorXd beta = irls(y, x, weight, nullptr);
    const Eigen::VectorXd mu = (x * beta).array().exp();
    return nb2_loglik(y, mu, phi);
  };

  // Coarse scan over log(phi), then Brent refinement of the best bracket.
  constexpr double kLo = -6.0, kHi = 20.0;
  constexpr int kGrid = 53;
  double best_lp = kLo;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double lp = kLo + (kHi - kLo) * i / (kGrid - 1);
    const double v = profile(lp);
    if (v > best_val) {
      best_val = v;
      best_lp = lp;
    }
  }

  GlmFit fit;
  fit.colnames = colnames;
  const double step = (kHi - kLo) / (kGrid - 1);
  if (best_lp >= kHi - step / 2.0) {
    // Dispersion diverging: the NB2 likelihood approaches the Poisson limit.
    fit = poisson_regression(y, x, colnames);
    fit.poisson_limit = true;
    fit.dispersion = std::numeric_limits<double>::infinity();
    return fit;
  }
  const auto [opt_lp, neg_ll] = boost::math::tools::brent_find_minima(
      [&](double lp) { return -profile(lp); }, std::max(kLo, best_lp - step),
      std::min(kHi, best_lp + step), 40);
  const double phi = std::exp(opt_lp);

  auto weight = [phi](double mu) { return mu / (1.0 + mu / phi); };
  fit.coefficients = irls(y, x, weight, &fit.iterations);
  const Eigen::VectorXd mu = (x * fit.coefficients).array().exp();
  // beta and phi are information-orthogonal in NB2, so the beta block of the
  // Fisher information is exact at the profiled phi.
  wald_from_info(fit, mu, x, weight);
  fit.dispersion = phi;
  fit.loglik = -neg_ll;
  fit.pseudo_r2 = adjusted_r2(y, mu, static_cast<int>(x.cols()) + 1);
  return fit;
}

OverdispersionResult overdispersion_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  GlmFit pois = poisson_regression(y, x, {});
  const Eigen::VectorXd mu = (x * pois.coefficients).array().exp();

  OverdispersionResult res;
  res.mean = y.mean();
  double var = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) var += (y[i] - res.mean) * (y[i] - res.mean);
  res.variance = var / static_cast<double>(y.size() - 1);

  std::vector<double> t, m;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (mu[i] < 1e-8) {
      ++res.n_dropped;
      continue;
    }
    t.push_back(((y[i] - mu[i]) * (y[i] - mu[i]) - y[i]) / mu[i]);
    m.push_back(mu[i]);
  }
  res.n_used = static_cast<int>(t.size());
  if (res.n_used < 2) throw data_error("overdispersion_test: fewer than 2 usable rows");

  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < res.n_used; ++i) {
    sxx += m[i] * m[i];
    sxy += m[i] * t[i];
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (int i = 0; i < res.n_used; ++i) {
    const double e = t[i] - slope * m[i];
    sse += e * e;
  }
  const double df = static_cast<double>(res.n_used - 1);
  const double se = std::sqrt(sse / df / sxx);
  res.statistic = slope / se;
  res.p_value = 1.0 - student_cdf(res.statistic, df);
  return res;
}

std::vector<YearCorrelation> pearson_by_year(const Eigen::MatrixXd& a,
                                             const Eigen::MatrixXd& b,
                                             const Eigen::Matrix<bool, -1, -1>& observed) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw data_error("pearson_by_year: matrices must have identical shape");
  const Eigen::Index t_total = a.cols();
  std::vector<YearCorrelation> out(t_total);
  int tested = 0;
  for (Eigen::Index t = 0; t < t_total; ++t) {
    std::vector<double> xa, xb;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (observed.size() != 0 && !observed(i, t)) continue;
      xa.push_back(a(i, t));
      xb.push_back(b(i, t));
    }
    YearCorrelation yc;
    yc.year = static_cast<int>(t);
    yc.n = static_cast<int>(xa.size());
    if (yc.n >= 3) {
      const double ma = std::accumulate(xa.begin(), xa.end(), 0.0) / yc.n;
      const double mb = std::accumulate(xb.begin(), xb.end(), 0.0) / yc.n;
      double saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int i = 0; i < yc.n; ++i) {
        saa += (xa[i] - ma) * (xa[i] - ma);
        sbb += (xb[i] - mb) * (xb[i] - mb);
        sab += (xa[i] - ma) * (xb[i] - mb);
      }
      if (saa > 0.0 && sbb > 0.0) {
        yc.r = sab / std::sqrt(saa * sbb);
        ++tested;
      }
    }
    out[t] = yc;
  }
  // Bonferroni across the years actually tested.
  for (auto& yc : out) {
    if (!yc.r) continue;
    const double r = std::clamp(*yc.r, -1.0, 1.0);
    double p;
    if (std::abs(r) >= 1.0 - 1e-15) {
      p = 0.0;
    } else {
      const double df = yc.n - 2;
      const double tstat = r * std::sqrt(df / (1.0 - r * r));
      p = 2.0 * (1.0 - student_cdf(std::abs(tstat), df));
    }
    yc.p_adjusted = std::min(1.0, p * tested);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw data_error("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<BoxStats> group_citation_summary(const std::vector<GroupSummaryInput>& rows,
                                             std::vector<std::string>* warnings) {
  if (rows.empty()) throw data_error("group_citation_summary: no rows");
  std::vector<std::string> fields;
  for (const auto& r : rows)
    if (std::find(fields.begin(), fields.end(), r.field) == fields.end())
      fields.push_back(r.field);

  std::vector<BoxStats> out;
  for (const auto& field : fields) {
    for (bool repro : {false, true}) {
      std::vector<double> totals;
      for (const auto& r : rows)
        if (r.field == field && r.reproduced == repro) totals.push_back(r.total);
      if (totals.empty()) {
        if (warnings)
          warnings->push_back("group " + field + " x " + (repro ? "reproduced" : "failed") +
                              " is empty; omitted");
        continue;
      }
      BoxStats bs;
      bs.field = field;
      bs.reproduced = repro;
      bs.n = static_cast<int>(totals.size());
      bs.q1 = quantile(totals, 0.25);
      bs.median = quantile(totals, 0.5);
      bs.q3 = quantile(totals, 0.75);
      const double iqr = bs.q3 - bs.q1;
      const double lo_fence = bs.q1 - 1.5 * iqr;
      const double hi_fence = bs.q3 + 1.5 * iqr;
      bs.whisker_lo = bs.q3;
      bs.whisker_hi = bs.q1;
      std::sort(totals.begin(), totals.end());
      bs.whisker_lo = totals.back();
      bs.whisker_hi = totals.front();
      for (double v : totals) {
        if (v >= lo_fence) bs.whisker_lo = std::min(bs.whisker_lo, v);
        if (v <= hi_fence) bs.whisker_hi = std::max(bs.whisker_hi, v);
        if (v < lo_fence || v > hi_fence) bs.outliers.push_back(v);
      }
      out.push_back(std::move(bs));
    }
  }
  return out;
}

}  // namespace citerate::glm
