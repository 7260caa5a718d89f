#pragma once

#include <span>
#include <string>
#include <vector>

#include "citerate/types.hpp"

namespace citerate::model {

/// Named index map into the flat unconstrained parameter vector.
///
/// Block order: lambda_ridge, alpha, omega_s (K-1 stick-breaking coords),
/// omega_f (K-1), base (K, log scale), shift (K, log scale), beta_hat
/// (science only), beta, bias, gate_mu, gate_kappa, phi, gate (N).
struct LatentLayout {
  int n_styles = 0;   // K
  int n_coef = 0;     // fields (science) or features (ml)
  int n_bias = 0;     // fields (science) or 1 (ml)
  int n_papers = 0;   // N
  bool has_beta_hat = false;

  int lambda_ridge = 0, alpha = 0, omega_s = 0, omega_f = 0, base = 0, shift = 0;
  int beta_hat = 0, beta = 0, bias = 0, gate_mu = 0, gate_kappa = 0, phi = 0, gate = 0;
  int dim = 0;

  static LatentLayout create(const ModelConfig& cfg, int n_papers);

  /// Human-readable name of unconstrained coordinate i (for gradient and
  /// non-finite diagnostics).
  std::string coord_name(int i, const ModelConfig& cfg) const;
};

/// Unconstrained vector plus its layout.
struct LatentVector {
  std::vector<double> theta;
  LatentLayout layout;
};

/// Map the unconstrained vector to constrained parameters, accumulating the
/// log absolute Jacobian determinant of the transform (exp for positives,
/// logistic for intervals, stick-breaking for simplexes).
/// Throws config_error on a layout/length mismatch.
ConstrainedParams constrain(std::span<const double> theta, const LatentLayout& lay,
                            double* log_jacobian);

/// Inverse of constrain (log_jacobian not produced).
std::vector<double> unconstrain(const ConstrainedParams& p, const LatentLayout& lay);

/// Stick-breaking simplex transform (centered convention: all-zero raw
/// coordinates map to the uniform simplex).  out.size() == raw.size() + 1.
/// Returns the log-Jacobian contribution.
double stick_breaking(std::span<const double> raw, std::span<double> out);
void stick_breaking_inverse(std::span<const double> simplex, std::span<double> raw);

/// Labels of the constrained parameter vector in draw-matrix column order.
std::vector<std::string> constrained_names(const ModelConfig& cfg, const Dataset& data);

/// Column offsets into the flattened constrained vector (the draw-matrix
/// order produced by flatten_constrained).
struct ConstrainedIndex {
  int lambda_ridge = 0, alpha = 1;
  int omega_s = 0, omega_f = 0, base = 0, shift = 0;
  int beta_hat = -1;  // -1 when absent (ml variant)
  int beta = 0, bias = 0, gate_mu = 0, gate_kappa = 0, phi = 0, gate = 0;
  int n_styles = 0, n_coef = 0, n_bias = 0, n_papers = 0;
  int size = 0;

  static ConstrainedIndex create(const ModelConfig& cfg, int n_papers);
};

/// Flatten constrained parameters in the same order as constrained_names.
std::vector<double> flatten_constrained(const ConstrainedParams& p, const LatentLayout& lay);

}  // namespace citerate::model
