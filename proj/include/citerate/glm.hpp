#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace citerate::glm {

/// Count-regression fit on the log-rate scale.
struct GlmFit {
  std::vector<std::string> colnames;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd z_scores;
  Eigen::VectorXd p_values;
  double dispersion = 0.0;  // NB2 phi; 0 for Poisson
  double loglik = 0.0;
  double pseudo_r2 = 0.0;   // squared fitted/observed correlation, adjusted for df
  int iterations = 0;
  bool poisson_limit = false;  // NB dispersion diverged; coefficients are the Poisson fit
};

/// Poisson MLE via iteratively reweighted least squares with Wald p-values.
/// Throws data_error on a rank-deficient design (naming collinear columns)
/// or non-convergence after 100 iterations.
GlmFit poisson_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                          const std::vector<std::string>& colnames);

/// NB2 MLE (variance mu + mu^2/phi); dispersion profiled by maximizing the
/// profile likelihood in log(phi).  A diverging dispersion is reported as
/// poisson_limit = true with the Poisson coefficients, not an error.
GlmFit negbin_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                         const std::vector<std::string>& colnames);

struct OverdispersionResult {
  double statistic = 0.0;  // t-statistic of the auxiliary slope
  double p_value = 1.0;    // one-sided, H1: variance > mean
  double mean = 0.0;
  double variance = 0.0;
  int n_used = 0;
  int n_dropped = 0;  // rows with fitted mean ~ 0
};

/// Cameron-Trivedi auxiliary regression for overdispersion: regress
/// ((y - mu)^2 - y) / mu on mu without intercept after a Poisson fit, and
/// test the slope > 0.
OverdispersionResult overdispersion_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

struct YearCorrelation {
  int year = 0;
  std::optional<double> r;  // undefined when either source has zero variance
  std::optional<double> p_adjusted;
  int n = 0;
};

/// Pearson correlation between two per-year count matrices (papers x years),
/// restricted to cells observed in both; p-values Bonferroni-adjusted across
/// the years tested.
std::vector<YearCorrelation> pearson_by_year(const Eigen::MatrixXd& a,
                                             const Eigen::MatrixXd& b,
                                             const Eigen::Matrix<bool, -1, -1>& observed);

struct BoxStats {
  std::string field;
  bool reproduced = false;
  int n = 0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  std::vector<double> outliers;
};

/// Box-plot statistic set (linear-interpolation quartiles, 1.5 IQR whiskers)
/// of total citations per (field x reproduction) group.
struct GroupSummaryInput {
  std::string field;
  bool reproduced = false;
  double total = 0.0;
};
std::vector<BoxStats> group_citation_summary(const std::vector<GroupSummaryInput>& rows,
                                             std::vector<std::string>* warnings = nullptr);

/// Linear-interpolation quantile of a sample (matplotlib/numpy default).
double quantile(std::vector<double> values, double q);

}  // namespace citerate::glm
