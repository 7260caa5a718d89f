#include "citerate/layout.hpp"

#include <cmath>
#include <sstream>

#include "citerate/errors.hpp"

namespace citerate::model {

namespace {

// log(1 + exp(a)) without overflow.
double log1p_exp(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

double inv_logit(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double x) { return std::log(x) - std::log1p(-x); }

// log-Jacobian of the logistic transform: log s'(u) = log s(u) + log(1-s(u)).
double logistic_log_jac(double u) { return -log1p_exp(-u) - log1p_exp(u); }

}  // namespace

LatentLayout LatentLayout::create(const ModelConfig& cfg, int n_papers) {
  LatentLayout lay;
  lay.n_styles = cfg.components;
  lay.n_coef = cfg.n_groups();
  lay.n_bias = (cfg.variant == Variant::Science) ? cfg.n_groups() : 1;
  lay.n_papers = n_papers;
  lay.has_beta_hat = (cfg.variant == Variant::Science);

  int off = 0;
  lay.lambda_ridge = off++;
  lay.alpha = off++;
  lay.omega_s = off;
  off += lay.n_styles - 1;
  lay.omega_f = off;
  off += lay.n_styles - 1;
  lay.base = off;
  off += lay.n_styles;
  lay.shift = off;
  off += lay.n_styles;
  lay.beta_hat = off;
  if (lay.has_beta_hat) ++off;
  lay.beta = off;
  off += lay.n_coef;
  lay.bias = off;
  off += lay.n_bias;
  lay.gate_mu = off++;
  lay.gate_kappa = off++;
  lay.phi = off++;
  lay.gate = off;
  off += lay.n_papers;
  lay.dim = off;
  return lay;
}

std::string LatentLayout::coord_name(int i, const ModelConfig& cfg) const {
  std::ostringstream os;
  auto in = [&](int start, int count) { return i >= start && i < start + count; };
  if (i == lambda_ridge) return "log_lambda_ridge";
  if (i == alpha) return "logit_alpha";
  if (in(omega_s, n_styles - 1)) {
    os << "omega_s_raw[" << i - omega_s << "]";
  } else if (in(omega_f, n_styles - 1)) {
    os << "omega_f_raw[" << i - omega_f << "]";
  } else if (in(base, n_styles)) {
    os << "log_base[" << i - base << "]";
  } else if (has_beta_hat && i == beta_hat) {
    return "beta_hat";
  } else if (in(shift, n_styles)) {
    os << "log_shift[" << i - shift << "]";
  } else if (in(beta, n_coef)) {
    const int j = i - beta;
    os << "beta[" << (j < static_cast<int>(cfg.group_names.size()) ? cfg.group_names[j]
                                                                   : std::to_string(j))
       << "]";
  } else if (in(bias, n_bias)) {
    const int j = i - bias;
    if (cfg.variant == Variant::Science && j < static_cast<int>(cfg.group_names.size()))
      os << "bias[" << cfg.group_names[j] << "]";
    else
      os << "bias";
  } else if (i == gate_mu) {
    return "logit_gate_mu";
  } else if (i == gate_kappa) {
    return "log_gate_kappa";
  } else if (i == phi) {
    return "log_phi";
  } else if (in(gate, n_papers)) {
    os << "logit_gate[" << i - gate << "]";
  } else {
    os << "coord[" << i << "]";
  }
  return os.str();
}

double stick_breaking(std::span<const double> raw, std::span<double> out) {
  const int k_total = static_cast<int>(out.size());
  if (static_cast<int>(raw.size()) != k_total - 1)
    throw config_error("stick_breaking: raw size must be K-1");
  double log_jac = 0.0;
  double remaining = 1.0;
  for (int k = 0; k < k_total - 1; ++k) {
    const double t = raw[k] - std::log(static_cast<double>(k_total - k - 1));
    const double z = inv_logit(t);
    out[k] = remaining * z;
    // d out[k] / d raw[k] = remaining * z * (1-z)
    log_jac += std::log(remaining) - log1p_exp(-t) - log1p_exp(t);
    remaining -= out[k];
  }
  out[k_total - 1] = remaining;
  return log_jac;
}

void stick_breaking_inverse(std::span<const double> simplex, std::span<double> raw) {
  const int k_total = static_cast<int>(simplex.size());
  double remaining = 1.0;
  for (int k = 0; k < k_total - 1; ++k) {
    const double z = simplex[k] / remaining;
    raw[k] = logit(z) + std::log(static_cast<double>(k_total - k - 1));
    remaining -= simplex[k];
  }
}

ConstrainedParams constrain(std::span<const double> theta, const LatentLayout& lay,
                            double* log_jacobian) {
  if (static_cast<int>(theta.size()) != lay.dim) {
    std::ostringstream os;
    os << "constrain: latent vector length " << theta.size() << " does not match layout dim "
       << lay.dim;
    throw config_error(os.str());
  }
  ConstrainedParams p;
  double lj = 0.0;
  const int k_total = lay.n_styles;

  p.lambda_ridge = std::exp(theta[lay.lambda_ridge]);
  lj += theta[lay.lambda_ridge];
  p.alpha = inv_logit(theta[lay.alpha]);
  lj += logistic_log_jac(theta[lay.alpha]);

  p.omega_s.resize(k_total);
  p.omega_f.resize(k_total);
  lj += stick_breaking(theta.subspan(lay.omega_s, k_total - 1), p.omega_s);
  lj += stick_breaking(theta.subspan(lay.omega_f, k_total - 1), p.omega_f);

  p.style.base.resize(k_total);
  p.style.shift.resize(k_total);
  for (int k = 0; k < k_total; ++k) {
    p.style.base[k] = std::exp(theta[lay.base + k]);
    lj += theta[lay.base + k];
    p.style.shift[k] = std::exp(theta[lay.shift + k]);
    lj += theta[lay.shift + k];
  }

  p.beta_hat = lay.has_beta_hat ? theta[lay.beta_hat] : 0.0;
  p.beta.assign(theta.begin() + lay.beta, theta.begin() + lay.beta + lay.n_coef);
  p.bias.assign(theta.begin() + lay.bias, theta.begin() + lay.bias + lay.n_bias);

  p.gate_mu = inv_logit(theta[lay.gate_mu]);
  lj += logistic_log_jac(theta[lay.gate_mu]);
  p.gate_kappa = std::exp(theta[lay.gate_kappa]);
  lj += theta[lay.gate_kappa];
  p.phi = std::exp(theta[lay.phi]);
  lj += theta[lay.phi];

  p.gate.resize(lay.n_papers);
  for (int i = 0; i < lay.n_papers; ++i) {
    p.gate[i] = inv_logit(theta[lay.gate + i]);
    lj += logistic_log_jac(theta[lay.gate + i]);
  }

  if (log_jacobian) *log_jacobian = lj;
  return p;
}

std::vector<double> unconstrain(const ConstrainedParams& p, const LatentLayout& lay) {
  std::vector<double> theta(lay.dim, 0.0);
  const int k_total = lay.n_styles;
  theta[lay.lambda_ridge] = std::log(p.lambda_ridge);
  theta[lay.alpha] = logit(p.alpha);
  stick_breaking_inverse(p.omega_s, std::span(theta).subspan(lay.omega_s, k_total - 1));
  stick_breaking_inverse(p.omega_f, std::span(theta).subspan(lay.omega_f, k_total - 1));
  for (int k = 0; k < k_total; ++k) {
    theta[lay.base + k] = std::log(p.style.base[k]);
    theta[lay.shift + k] = std::log(p.style.shift[k]);
  }
  if (lay.has_beta_hat) theta[lay.beta_hat] = p.beta_hat;
  std::copy(p.beta.begin(), p.beta.end(), theta.begin() + lay.beta);
  std::copy(p.bias.begin(), p.bias.end(), theta.begin() + lay.bias);
  theta[lay.gate_mu] = logit(p.gate_mu);
  theta[lay.gate_kappa] = std::log(p.gate_kappa);
  theta[lay.phi] = std::log(p.phi);
  for (int i = 0; i < lay.n_papers; ++i) theta[lay.gate + i] = logit(p.gate[i]);
  return theta;
}

std::vector<std::string> constrained_names(const ModelConfig& cfg, const Dataset& data) {
  std::vector<std::string> names;
  const int k_total = cfg.components;
  names.emplace_back("lambda_ridge");
  names.emplace_back("alpha");
  for (int k = 0; k < k_total; ++k) names.push_back("omega_S[" + std::to_string(k) + "]");
  for (int k = 0; k < k_total; ++k) names.push_back("omega_F[" + std::to_string(k) + "]");
  for (int k = 0; k < k_total; ++k) names.push_back("base[" + std::to_string(k) + "]");
  for (int k = 0; k < k_total; ++k) names.push_back("shift[" + std::to_string(k) + "]");
  if (cfg.variant == Variant::Science) names.emplace_back("beta_hat");
  for (const auto& g : cfg.group_names) names.push_back("beta[" + g + "]");
  if (cfg.variant == Variant::Science) {
    for (const auto& g : cfg.group_names) names.push_back("bias[" + g + "]");
  } else {
    names.emplace_back("bias");
  }
  names.emplace_back("gate_mu");
  names.emplace_back("gate_kappa");
  names.emplace_back("phi");
  for (const auto& rec : data.papers) names.push_back("gate[" + rec.id + "]");
  return names;
}

ConstrainedIndex ConstrainedIndex::create(const ModelConfig& cfg, int n_papers) {
  ConstrainedIndex ci;
  ci.n_styles = cfg.components;
  ci.n_coef = cfg.n_groups();
  ci.n_bias = (cfg.variant == Variant::Science) ? cfg.n_groups() : 1;
  ci.n_papers = n_papers;
  int off = 2;  // lambda_ridge, alpha
  ci.omega_s = off;
  off += ci.n_styles;
  ci.omega_f = off;
  off += ci.n_styles;
  ci.base = off;
  off += ci.n_styles;
  ci.shift = off;
  off += ci.n_styles;
  if (cfg.variant == Variant::Science) ci.beta_hat = off++;
  ci.beta = off;
  off += ci.n_coef;
  ci.bias = off;
  off += ci.n_bias;
  ci.gate_mu = off++;
  ci.gate_kappa = off++;
  ci.phi = off++;
  ci.gate = off;
  off += ci.n_papers;
  ci.size = off;
  return ci;
}

std::vector<double> flatten_constrained(const ConstrainedParams& p, const LatentLayout& lay) {
  std::vector<double> v;
  v.reserve(2 + 4 * lay.n_styles + lay.n_coef + lay.n_bias + 3 + lay.n_papers +
            (lay.has_beta_hat ? 1 : 0));
  v.push_back(p.lambda_ridge);
  v.push_back(p.alpha);
  v.insert(v.end(), p.omega_s.begin(), p.omega_s.end());
  v.insert(v.end(), p.omega_f.begin(), p.omega_f.end());
  v.insert(v.end(), p.style.base.begin(), p.style.base.end());
  v.insert(v.end(), p.style.shift.begin(), p.style.shift.end());
  if (lay.has_beta_hat) v.push_back(p.beta_hat);
  v.insert(v.end(), p.beta.begin(), p.beta.end());
  v.insert(v.end(), p.bias.begin(), p.bias.end());
  v.push_back(p.gate_mu);
  v.push_back(p.gate_kappa);
  v.push_back(p.phi);
  v.insert(v.end(), p.gate.begin(), p.gate.end());
  return v;
}

}  // namespace citerate::model
