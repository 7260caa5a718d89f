#include "citerate/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "citerate/dists.hpp"
#include "citerate/errors.hpp"

namespace citerate::model {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double linear_predictor(const PaperRecord& rec, const ConstrainedParams& p,
                        const ModelConfig& cfg) {
  if (cfg.variant == Variant::Science) {
    int g = rec.group_index;
    if (g < 0) {
      auto it = std::find(cfg.group_names.begin(), cfg.group_names.end(), rec.field);
      if (it == cfg.group_names.end())
        throw data_error("linear_predictor: unknown field label '" + rec.field + "'");
      g = static_cast<int>(it - cfg.group_names.begin());
    }
    return (rec.success() ? p.beta[g] : 0.0) + p.bias[g];
  }
  if (rec.features.size() != p.beta.size())
    throw data_error("linear_predictor: feature vector length mismatch for paper '" +
                     rec.id + "'");
  double eta = p.bias[0];
  for (std::size_t j = 0; j < p.beta.size(); ++j) eta += p.beta[j] * rec.features[j];
  return eta;
}

double paper_loglik_given_style(const PaperRecord& rec, int k, const ConstrainedParams& p,
                                const ModelConfig& cfg) {
  const double mu_i = std::exp(linear_predictor(rec, p, cfg));
  const double base = p.style.base[k];
  const double shift = p.style.shift[k];
  const double gate = p.gate[rec.index];
  double ll = 0.0;
  const int horizon = std::min<int>(cfg.horizon, static_cast<int>(rec.counts.size()));
  for (int t = 0; t < horizon; ++t) {
    if (!rec.observed[t]) continue;
    const double expo = std::max(static_cast<double>(t) - shift, 0.0);
    const double mu_it = mu_i * std::pow(base, expo);
    ll += dists::zinb_logpmf(rec.counts[t], gate, mu_it, p.phi);
  }
  return ll;
}

double collapsed_loglik(const PaperRecord& rec, const ConstrainedParams& p,
                        const ModelConfig& cfg) {
  const auto& omega = rec.success() ? p.omega_s : p.omega_f;
  const int k_total = static_cast<int>(omega.size());
  std::vector<double> terms(k_total);
  double max_term = kNegInf;
  for (int k = 0; k < k_total; ++k) {
    terms[k] = std::log(omega[k]) + paper_loglik_given_style(rec, k, p, cfg);
    max_term = std::max(max_term, terms[k]);
  }
  if (max_term == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

double log_prior(const ConstrainedParams& p, const ModelConfig& cfg) {
  using dists::DistParams;
  const int k_total = static_cast<int>(p.style.base.size());
  double lp = 0.0;
  lp += dists::prior_logpdf(DistParams::half_cauchy(1.0), p.lambda_ridge);
  lp += dists::prior_logpdf(DistParams::beta(1.0, 10.0), p.alpha);
  const auto dir = DistParams::dirichlet(p.alpha, k_total);
  lp += dists::prior_logpdf(dir, std::span<const double>(p.omega_s));
  lp += dists::prior_logpdf(dir, std::span<const double>(p.omega_f));
  const auto base_prior = DistParams::gamma(cfg.gamma_base_shape, cfg.gamma_base_rate);
  const auto shift_prior = DistParams::exponential(cfg.laplace_scale());
  for (int k = 0; k < k_total; ++k) {
    lp += dists::prior_logpdf(base_prior, p.style.base[k]);
    lp += dists::prior_logpdf(shift_prior, p.style.shift[k]);
  }
  if (cfg.variant == Variant::Science) {
    lp += dists::prior_logpdf(DistParams::normal(0.0, 1.0), p.beta_hat);
    const double coef_sd = std::sqrt(p.lambda_ridge);
    for (double b : p.beta)
      lp += dists::prior_logpdf(DistParams::normal(p.beta_hat, coef_sd), b);
  } else {
    const double coef_sd = std::sqrt(p.lambda_ridge);
    for (double b : p.beta) lp += dists::prior_logpdf(DistParams::normal(0.0, coef_sd), b);
  }
  for (double b : p.bias) lp += dists::prior_logpdf(DistParams::cauchy(0.0, 1.0), b);
  lp += dists::prior_logpdf(DistParams::uniform01(), p.gate_mu);
  lp += dists::prior_logpdf(DistParams::gamma(1.0, 20.0), p.gate_kappa);
  lp += dists::prior_logpdf(DistParams::half_cauchy(5.0), p.phi);
  for (double g : p.gate)
    lp += dists::beta_proportion_logpdf(g, p.gate_mu, p.gate_kappa);
  return lp;
}

double joint_log_density(std::span<const double> theta, const Dataset& data,
                         const ModelConfig& cfg, std::string* nonfinite_term) {
  const auto lay = LatentLayout::create(cfg, static_cast<int>(data.size()));
  double log_jac = 0.0;
  const ConstrainedParams p = constrain(theta, lay, &log_jac);

  const double prior = log_prior(p, cfg);
  if (!std::isfinite(prior)) {
    if (nonfinite_term) *nonfinite_term = "log_prior";
    return prior;
  }
  double ll = 0.0;
  for (const auto& rec : data.papers) {
    const double li = collapsed_loglik(rec, p, cfg);
    if (!std::isfinite(li)) {
      if (nonfinite_term) *nonfinite_term = "loglik[" + rec.id + "]";
      return li;
    }
    ll += li;
  }
  const double total = prior + ll + log_jac;
  if (!std::isfinite(total) && nonfinite_term) *nonfinite_term = "log_jacobian";
  return total;
}

ConstrainedParams sample_prior(const ModelConfig& cfg, int n_papers, RngStream& rng) {
  using dists::DistParams;
  const int k_total = cfg.components;
  ConstrainedParams p;
  p.lambda_ridge = rng.half_cauchy(1.0);
  p.alpha = rng.beta(1.0, 10.0);
  p.omega_s.resize(k_total);
  p.omega_f.resize(k_total);
  rng.dirichlet_symmetric(p.alpha, p.omega_s);
  rng.dirichlet_symmetric(p.alpha, p.omega_f);
  p.style.base.resize(k_total);
  p.style.shift.resize(k_total);
  for (int k = 0; k < k_total; ++k) {
    p.style.shift[k] = rng.exponential(cfg.laplace_scale());
    p.style.base[k] = rng.gamma(cfg.gamma_base_shape, cfg.gamma_base_rate);
  }
  const int n_coef = cfg.n_groups();
  if (cfg.variant == Variant::Science) {
    p.beta_hat = rng.normal();
    const double sd = std::sqrt(p.lambda_ridge);
    p.beta.resize(n_coef);
    p.bias.resize(n_coef);
    for (int j = 0; j < n_coef; ++j) {
      p.beta[j] = rng.normal(p.beta_hat, sd);
      p.bias[j] = rng.cauchy(0.0, 1.0);
    }
  } else {
    p.beta_hat = 0.0;
    const double sd = std::sqrt(p.lambda_ridge);
    p.beta.resize(n_coef);
    for (int j = 0; j < n_coef; ++j) p.beta[j] = rng.normal(0.0, sd);
    p.bias.assign(1, rng.cauchy(0.0, 1.0));
  }
  p.gate_mu = rng.uniform();
  p.gate_kappa = rng.gamma(1.0, 20.0);
  p.phi = rng.half_cauchy(5.0);
  p.gate.resize(n_papers);
  for (int i = 0; i < n_papers; ++i)
    p.gate[i] = rng.beta_proportion(p.gate_mu, p.gate_kappa);
  return p;
}

Dataset simulate_from_truth(const ConstrainedParams& truth,
                            const std::vector<DesignRow>& design, const ModelConfig& cfg,
                            RngStream& rng) {
  if (design.empty()) throw config_error("simulate_from_truth: design must be non-empty");
  Dataset out;
  out.variant = cfg.variant;
  out.group_names = cfg.group_names;
  out.papers.reserve(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto& row = design[i];
    PaperRecord rec;
    rec.id = "sim" + std::to_string(i);
    rec.field = row.field;
    rec.features = row.features;
    rec.repro = row.repro;
    rec.pub_year = row.pub_year;
    rec.observed.assign(row.observed.begin(), row.observed.end());
    rec.observed.resize(cfg.horizon, 0);
    rec.counts.assign(cfg.horizon, 0);
    rec.index = static_cast<int>(i);
    out.papers.push_back(std::move(rec));
  }
  out.finalize();

  for (auto& rec : out.papers) {
    // z ~ Categorical(omega^{r_i})
    const auto& omega = rec.success() ? truth.omega_s : truth.omega_f;
    double u = rng.uniform();
    int z = 0;
    for (std::size_t k = 0; k < omega.size(); ++k) {
      u -= omega[k];
      if (u <= 0.0) {
        z = static_cast<int>(k);
        break;
      }
      z = static_cast<int>(k);
    }
    const double mu_i = std::exp(linear_predictor(rec, truth, cfg));
    const double gate = truth.gate[rec.index];
    for (int t = 0; t < cfg.horizon; ++t) {
      if (!rec.observed[t]) continue;
      const double expo = std::max(static_cast<double>(t) - truth.style.shift[z], 0.0);
      const double mu_it = mu_i * std::pow(truth.style.base[z], expo);
      rec.counts[t] = rng.zinb(gate, mu_it, truth.phi);
    }
  }
  return out;
}

std::pair<Dataset, ConstrainedParams> prior_predictive(const ModelConfig& cfg,
                                                       const std::vector<DesignRow>& design,
                                                       RngStream& rng) {
  ConstrainedParams truth = sample_prior(cfg, static_cast<int>(design.size()), rng);
  Dataset data = simulate_from_truth(truth, design, cfg, rng);
  return {std::move(data), std::move(truth)};
}

}  // namespace citerate::model
