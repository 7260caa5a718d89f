#pragma once

#include <optional>
#include <string>
#include <vector>

#include "citerate/nuts.hpp"
#include "citerate/types.hpp"

namespace citerate::report {

/// One forest-plot row: posterior mean with a central 95% credible interval.
struct ForestRow {
  std::string label;
  double mean = 0.0;
  double lo = 0.0;  // 2.5% quantile
  double hi = 0.0;  // 97.5% quantile
};

/// Empirical mean and central 95% interval of each labeled draw column.
/// Requires at least 40 retained draws; an unknown label raises data_error
/// listing the available labels.
std::vector<ForestRow> summarize(const infer::PosteriorDraws& pd,
                                 const std::vector<std::string>& labels);

/// Latent citation style: mixture weights in both populations and the
/// per-year log multiplicative trajectory log(base^max(t-shift,0)).
struct StyleProfile {
  int style = 0;
  ForestRow weight_s;  // omega_S[k]
  ForestRow weight_f;  // omega_F[k]
  std::vector<double> traj_mean, traj_lo, traj_hi;  // length T
};

/// Profiles for styles whose mean weight exceeds `threshold` in either
/// population (discarded components have near-zero weights), sorted by
/// style index.
std::vector<StyleProfile> style_profiles(const infer::PosteriorDraws& pd,
                                         const ModelConfig& cfg,
                                         double threshold = 0.005);

struct BayesR2 {
  std::optional<double> r2;  // empty when predictions are degenerate
  std::string definition;   // embedded in output metadata
  std::string note;
};

/// Squared Pearson correlation between posterior-mean expected counts
/// (1-gate_i) * mu_i * sum_k omega^{r_i}[k] * base_k^max(t-shift_k,0) and the
/// observed counts, over all observed paper-year cells.
BayesR2 bayes_r2(const infer::PosteriorDraws& pd, const Dataset& data,
                 const ModelConfig& cfg);

/// CSV mirrors of everything plotted; the CSV is the source of truth and the
/// SVG is derived from the same rows.
void emit_forest_csv(const std::vector<ForestRow>& rows, const std::string& path);
void emit_forest_svg(const std::vector<ForestRow>& rows, const std::string& path,
                     const std::string& title);
void emit_styles_csv(const std::vector<StyleProfile>& profiles, const std::string& path);
void emit_styles_svg(const std::vector<StyleProfile>& profiles, const std::string& path,
                     const std::string& title);

/// Shared numeric formatting for CSV cells and SVG data labels.
std::string fmt_number(double v);

}  // namespace citerate::report
