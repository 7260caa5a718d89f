#pragma once

#include <string>
#include <vector>

namespace citerate {

enum class Variant { Science, Ml };

enum class Repro { Failure, Success };

/// One paper: group (field label or feature vector), reproduction outcome,
/// and per-relative-year citation counts with an observed-year prefix mask
/// (observed[t] is true iff calendar year pub_year + t has elapsed).
struct PaperRecord {
  std::string id;
  std::string field;             // science variant group label
  std::vector<double> features;  // ml variant covariates (standardized by the loader)
  Repro repro = Repro::Failure;
  int pub_year = 0;
  std::vector<long> counts;      // length T; ignored where observed is false
  std::vector<char> observed;    // length T prefix mask

  // Resolved by Dataset::finalize().
  int group_index = -1;  // index into Dataset::group_names (science)
  int index = -1;        // position within the dataset

  bool success() const { return repro == Repro::Success; }
};

struct Dataset {
  Variant variant = Variant::Science;
  std::vector<std::string> group_names;  // field names (science) or feature names (ml)
  std::vector<PaperRecord> papers;

  /// Resolve per-record indices; throws data_error on unknown field labels.
  void finalize();
  std::size_t size() const { return papers.size(); }
};

struct ModelConfig {
  int horizon = 10;     // T, relative years 0..T-1
  int components = 50;  // K, size of the citation-style pool
  Variant variant = Variant::Science;
  double gamma_base_shape = 100.0;  // prior on annual base multipliers,
  double gamma_base_rate = 100.0;   // centered at 1
  std::vector<std::string> group_names;  // copied from the dataset at fit time

  /// Scale of the positive Laplace prior on style shifts: the whole horizon
  /// is reachable at six prior standard scales.
  double laplace_scale() const { return static_cast<double>(horizon) / 6.0; }
  int n_groups() const { return static_cast<int>(group_names.size()); }
};

/// K latent citation styles: base is the annual multiplicative rate factor,
/// shift delays its onset (in years).
struct StylePool {
  std::vector<double> base;   // > 0
  std::vector<double> shift;  // >= 0
};

/// Model parameters on their natural (constrained) scales.
struct ConstrainedParams {
  double lambda_ridge = 1.0;  // variance of the coefficient prior
  double alpha = 0.5;         // symmetric Dirichlet concentration, in (0,1)
  std::vector<double> omega_s;  // K-simplex, style weights for reproduced papers
  std::vector<double> omega_f;  // K-simplex, style weights for failed papers
  StylePool style;
  double beta_hat = 0.0;      // hierarchical coefficient mean (science only)
  std::vector<double> beta;   // per-field (science) or per-feature (ml)
  std::vector<double> bias;   // per-field (science) or single intercept (ml)
  double gate_mu = 0.5;       // mean of the gate hyper prior, in (0,1)
  double gate_kappa = 1.0;    // concentration of the gate hyper prior
  double phi = 1.0;           // shared NB2 dispersion
  std::vector<double> gate;   // per-paper structural-zero probability, in (0,1)
};

}  // namespace citerate
