#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citerate/layout.hpp"
#include "citerate/rng.hpp"
#include "citerate/types.hpp"

namespace citerate::model {

/// log mean rate of paper i:
///   science: beta[field] * 1[reproduced] + bias[field]
///   ml:      dot(beta, x_i) + bias
double linear_predictor(const PaperRecord& rec, const ConstrainedParams& p,
                        const ModelConfig& cfg);

/// Log-likelihood of one paper conditional on citation style k:
/// sum over observed years t of ZINB(counts[t] | gate_i, mu_i * base_k^max(t-shift_k,0), phi).
/// Unobserved years contribute exactly zero.
double paper_loglik_given_style(const PaperRecord& rec, int k, const ConstrainedParams& p,
                                const ModelConfig& cfg);

/// Style-marginalized log-likelihood: logsumexp over k of
/// log omega^{r_i}[k] + paper_loglik_given_style(rec, k).
double collapsed_loglik(const PaperRecord& rec, const ConstrainedParams& p,
                        const ModelConfig& cfg);

/// Sum of all prior log-densities at p (no likelihood, no Jacobian).
double log_prior(const ConstrainedParams& p, const ModelConfig& cfg);

/// Full joint log-density in unconstrained space: priors + collapsed
/// likelihood + transform log-Jacobian.  When the result is non-finite and
/// `nonfinite_term` is given, it receives the name of the first non-finite
/// contribution (the sampler reports it and treats the point as rejected).
double joint_log_density(std::span<const double> theta, const Dataset& data,
                         const ModelConfig& cfg, std::string* nonfinite_term = nullptr);

/// Design row for the simulator: group label (science) or feature vector
/// (ml), reproduction flag, and the observed-year mask.
struct DesignRow {
  std::string field;
  std::vector<double> features;
  Repro repro = Repro::Failure;
  int pub_year = 0;
  std::vector<char> observed;
};

/// Draw model parameters from the Algorithm's priors.
ConstrainedParams sample_prior(const ModelConfig& cfg, int n_papers, RngStream& rng);

/// Generate counts from fixed truth for each design row.
Dataset simulate_from_truth(const ConstrainedParams& truth,
                            const std::vector<DesignRow>& design, const ModelConfig& cfg,
                            RngStream& rng);

/// Execute the generative story forward: sample truth from the priors, then
/// counts from the truth.  Returns the synthetic dataset and the generating
/// parameters (for recovery testing).
std::pair<Dataset, ConstrainedParams> prior_predictive(const ModelConfig& cfg,
                                                       const std::vector<DesignRow>& design,
                                                       RngStream& rng);

}  // namespace citerate::model
