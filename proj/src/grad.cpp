#include "citerate/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <boost/math/special_functions/digamma.hpp>

#include "citerate/errors.hpp"

namespace citerate::infer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kLogTwo = 0.6931471805599453094;
constexpr double kLogSqrtTwoPi = 0.9189385332046727418;

double log1p_exp(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

double digamma(double x) { return boost::math::digamma(x); }

// Forward stick-breaking in log space.  Records z_k and r_k (the remaining
// stick *before* break k) for the backward pass; fills omega and log_omega.
double stick_forward(std::span<const double> raw, std::span<double> omega,
                     std::span<double> log_omega, std::span<double> z_buf,
                     std::span<double> r_buf) {
  const int k_total = static_cast<int>(omega.size());
  double log_jac = 0.0;
  double log_rem = 0.0;
  double rem = 1.0;
  for (int k = 0; k < k_total - 1; ++k) {
    const double t = raw[k] - std::log(static_cast<double>(k_total - k - 1));
    const double lz = -log1p_exp(-t);
    const double lz1 = -log1p_exp(t);
    const double z = std::exp(lz);
    z_buf[k] = z;
    r_buf[k] = rem;
    log_omega[k] = log_rem + lz;
    omega[k] = std::exp(log_omega[k]);
    log_jac += log_rem + lz + lz1;
    log_rem += lz1;
    rem -= omega[k];
  }
  log_omega[k_total - 1] = log_rem;
  omega[k_total - 1] = std::exp(log_rem);
  return log_jac;
}

// Backward pass through stick_forward.  g_omega holds dF/d omega_k for the
// prior+likelihood parts; the transform's own log-Jacobian derivative is
// folded in here.  Writes dF/d raw_k into grad.
void stick_backward(std::span<const double> g_omega, std::span<const double> z_buf,
                    std::span<const double> r_buf, std::span<double> grad) {
  const int k_total = static_cast<int>(g_omega.size());
  double a_r = g_omega[k_total - 1];
  for (int k = k_total - 2; k >= 0; --k) {
    const double z = z_buf[k];
    const double r = r_buf[k];
    const double adj_z = (g_omega[k] - a_r) * r + 1.0 / z - 1.0 / (1.0 - z);
    grad[k] = adj_z * z * (1.0 - z);
    a_r = g_omega[k] * z + a_r * (1.0 - z) + 1.0 / r;
  }
}

}  // namespace

JointModel::JointModel(const Dataset& data, const ModelConfig& cfg) : data_(&data), cfg_(cfg) {
  if (cfg_.group_names.empty()) cfg_.group_names = data.group_names;
  layout_ = model::LatentLayout::create(cfg_, static_cast<int>(data.size()));

  std::unordered_map<long, int> unique_index;
  papers_.reserve(data.size());
  const int horizon = cfg_.horizon;
  for (const auto& rec : data.papers) {
    PaperData pd;
    pd.group = std::max(rec.group_index, 0);
    pd.success = rec.success();
    const int t_max = std::min<int>(horizon, static_cast<int>(rec.counts.size()));
    for (int t = 0; t < t_max; ++t) {
      if (!rec.observed[t]) continue;
      const long n = rec.counts[t];
      if (n < 0) throw data_error("negative citation count for paper '" + rec.id + "'");
      if (n == 0) {
        pd.years.push_back({t, -1, 0.0});
      } else {
        auto [it, inserted] = unique_index.try_emplace(n, static_cast<int>(unique_counts_.size()));
        if (inserted) unique_counts_.push_back(static_cast<double>(n));
        pd.years.push_back({t, it->second, static_cast<double>(n)});
      }
    }
    papers_.push_back(std::move(pd));
  }
  lgamma_count_.resize(unique_counts_.size());
  for (std::size_t u = 0; u < unique_counts_.size(); ++u)
    lgamma_count_[u] = std::lgamma(unique_counts_[u] + 1.0);
  c1_.resize(unique_counts_.size());
  dpsi_.resize(unique_counts_.size());

  const int k_total = layout_.n_styles;
  expo_.resize(static_cast<std::size_t>(k_total) * horizon);
  loff_.resize(static_cast<std::size_t>(k_total) * horizon);
  s_k_.resize(k_total);
  a_lm_.resize(k_total);
  a_lg_.resize(k_total);
  a_lg1_.resize(k_total);
  a_phi_.resize(k_total);
  a_lb_.resize(k_total);
  a_sh_.resize(k_total);
  rho_.resize(k_total);
  g_omega_s_.resize(k_total);
  g_omega_f_.resize(k_total);
  g_lb_.resize(k_total);
  g_shift_.resize(k_total);
  omega_s_.resize(k_total);
  omega_f_.resize(k_total);
  log_omega_s_.resize(k_total);
  log_omega_f_.resize(k_total);
  stick_z_.resize(2 * (k_total - 1));
  stick_r_.resize(2 * (k_total - 1));
}

void JointModel::refresh_count_cache(double phi) {
  const double lg_phi = std::lgamma(phi);
  for (std::size_t u = 0; u < unique_counts_.size(); ++u)
    c1_[u] = std::lgamma(unique_counts_[u] + phi) - lg_phi - lgamma_count_[u];
}

double JointModel::value(std::span<const double> theta) {
  return evaluate(theta, {}, false);
}

double JointModel::value_and_grad(std::span<const double> theta, std::span<double> grad) {
  return evaluate(theta, grad, true);
}

double JointModel::evaluate(std::span<const double> theta, std::span<double> grad,
                            bool want_grad) {
  const auto& lay = layout_;
  if (static_cast<int>(theta.size()) != lay.dim)
    throw config_error("JointModel: latent vector length mismatch");
  if (want_grad) {
    if (static_cast<int>(grad.size()) != lay.dim)
      throw config_error("JointModel: gradient buffer length mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  nonfinite_term_.clear();

  const int k_total = lay.n_styles;
  const int horizon = cfg_.horizon;
  const int n_papers = lay.n_papers;
  const bool science = (cfg_.variant == Variant::Science);

  // ---- transforms ----
  const double u_lam = theta[lay.lambda_ridge];
  const double lambda = std::exp(u_lam);
  const double u_alp = theta[lay.alpha];
  const double alpha = 1.0 / (1.0 + std::exp(-u_alp));
  const double log_one_minus_alpha = -log1p_exp(u_alp);

  double log_jac = u_lam + (-log1p_exp(-u_alp) - log1p_exp(u_alp));

  const int n_sticks = k_total - 1;
  log_jac += stick_forward(theta.subspan(lay.omega_s, n_sticks), omega_s_, log_omega_s_,
                           std::span(stick_z_).subspan(0, n_sticks),
                           std::span(stick_r_).subspan(0, n_sticks));
  log_jac += stick_forward(theta.subspan(lay.omega_f, n_sticks), omega_f_, log_omega_f_,
                           std::span(stick_z_).subspan(n_sticks, n_sticks),
                           std::span(stick_r_).subspan(n_sticks, n_sticks));

  const double* lb = theta.data() + lay.base;    // log base_k, used directly
  const double* u_sh = theta.data() + lay.shift;
  for (int k = 0; k < k_total; ++k) log_jac += lb[k] + u_sh[k];

  const double beta_hat = lay.has_beta_hat ? theta[lay.beta_hat] : 0.0;
  const double* beta = theta.data() + lay.beta;
  const double* bias = theta.data() + lay.bias;

  const double u_gmu = theta[lay.gate_mu];
  const double gate_mu = 1.0 / (1.0 + std::exp(-u_gmu));
  log_jac += -log1p_exp(-u_gmu) - log1p_exp(u_gmu);
  const double u_gk = theta[lay.gate_kappa];
  const double gate_kappa = std::exp(u_gk);
  log_jac += u_gk;
  const double u_phi = theta[lay.phi];
  const double phi = std::exp(u_phi);
  log_jac += u_phi;

  // Exponent table and per-style log-offsets.
  for (int k = 0; k < k_total; ++k) {
    const double shift = std::exp(u_sh[k]);
    for (int t = 0; t < horizon; ++t) {
      const double e = std::max(static_cast<double>(t) - shift, 0.0);
      expo_[static_cast<std::size_t>(k) * horizon + t] = e;
      loff_[static_cast<std::size_t>(k) * horizon + t] = e * lb[k];
    }
  }

  // ---- priors ----
  double prior = 0.0;
  // lambda_ridge ~ HalfCauchy(0,1)
  prior += kLogTwo - kLogPi - std::log1p(lambda * lambda);
  // alpha ~ Beta(1,10)
  prior += std::log(10.0) + 9.0 * log_one_minus_alpha;
  // omega ~ Dirichlet(alpha) symmetric, two simplexes
  double sum_log_omega_s = 0.0, sum_log_omega_f = 0.0;
  for (int k = 0; k < k_total; ++k) {
    sum_log_omega_s += log_omega_s_[k];
    sum_log_omega_f += log_omega_f_[k];
  }
  const double kd = static_cast<double>(k_total);
  const double dir_norm = std::lgamma(alpha * kd) - kd * std::lgamma(alpha);
  prior += 2.0 * dir_norm + (alpha - 1.0) * (sum_log_omega_s + sum_log_omega_f);
  // styles
  const double a0 = cfg_.gamma_base_shape, b0 = cfg_.gamma_base_rate;
  const double gamma_norm = a0 * std::log(b0) - std::lgamma(a0);
  const double s0 = cfg_.laplace_scale();
  for (int k = 0; k < k_total; ++k) {
    const double base_k = std::exp(lb[k]);
    const double shift_k = std::exp(u_sh[k]);
    prior += gamma_norm + (a0 - 1.0) * lb[k] - b0 * base_k;
    prior += -std::log(s0) - shift_k / s0;
  }
  // coefficients
  const int n_coef = lay.n_coef;
  double sum_dev2 = 0.0;  // sum of (beta_j - center)^2
  if (science) prior += -0.5 * beta_hat * beta_hat - kLogSqrtTwoPi;
  for (int j = 0; j < n_coef; ++j) {
    const double d = beta[j] - (science ? beta_hat : 0.0);
    sum_dev2 += d * d;
    prior += -0.5 * d * d / lambda - 0.5 * u_lam - kLogSqrtTwoPi;
  }
  for (int j = 0; j < lay.n_bias; ++j)
    prior += -kLogPi - std::log1p(bias[j] * bias[j]);
  // gate hyper priors: gate_mu ~ U(0,1) contributes 0
  prior += std::log(20.0) - 20.0 * gate_kappa;
  prior += kLogTwo - kLogPi - std::log(5.0) - std::log1p(phi * phi / 25.0);

  // gate_i ~ BetaProportion(gate_mu, gate_kappa)
  const double shape_a = gate_mu * gate_kappa;
  const double shape_b = (1.0 - gate_mu) * gate_kappa;
  const double gate_norm = std::lgamma(shape_a + shape_b) - std::lgamma(shape_a) -
                           std::lgamma(shape_b);
  double sum_lg = 0.0, sum_lg1 = 0.0;

  // ---- likelihood ----
  refresh_count_cache(phi);
  const double l_phi = std::log(phi);
  const double psi_phi = want_grad ? digamma(phi) : 0.0;
  if (want_grad) {
    for (std::size_t u = 0; u < unique_counts_.size(); ++u)
      dpsi_[u] = digamma(unique_counts_[u] + phi) - psi_phi;
    std::fill(g_omega_s_.begin(), g_omega_s_.end(), 0.0);
    std::fill(g_omega_f_.begin(), g_omega_f_.end(), 0.0);
    std::fill(g_lb_.begin(), g_lb_.end(), 0.0);
    std::fill(g_shift_.begin(), g_shift_.end(), 0.0);
  }

  double loglik = 0.0;
  double g_phi_acc = 0.0;

  for (int i = 0; i < n_papers; ++i) {
    const PaperData& pd = papers_[i];
    const PaperRecord& rec = data_->papers[i];

    double lmu = 0.0;
    if (science) {
      lmu = (pd.success ? beta[pd.group] : 0.0) + bias[pd.group];
    } else {
      lmu = bias[0];
      for (int j = 0; j < n_coef; ++j) lmu += beta[j] * rec.features[j];
    }

    const double u_g = theta[lay.gate + i];
    const double g = 1.0 / (1.0 + std::exp(-u_g));
    const double lg = -log1p_exp(-u_g);
    const double lg1 = -log1p_exp(u_g);
    sum_lg += lg;
    sum_lg1 += lg1;
    prior += gate_norm + (shape_a - 1.0) * lg + (shape_b - 1.0) * lg1;
    log_jac += lg + lg1;

    const auto& log_omega = pd.success ? log_omega_s_ : log_omega_f_;

    double max_term = kNegInf;
    for (int k = 0; k < k_total; ++k) {
      double s = 0.0, alm = 0.0, alg = 0.0, alg1 = 0.0, aphi = 0.0, albk = 0.0, ashk = 0.0;
      const double* loff_k = loff_.data() + static_cast<std::size_t>(k) * horizon;
      const double* expo_k = expo_.data() + static_cast<std::size_t>(k) * horizon;
      for (const YearObs& yo : pd.years) {
        const double lm = lmu + loff_k[yo.t];
        const double muv = std::exp(lm);
        const double v = muv + phi;
        const double lv = std::log(v);
        const double e = expo_k[yo.t];
        if (yo.unique_idx >= 0) {
          const double n = yo.count;
          s += lg1 + c1_[yo.unique_idx] + n * (lm - lv) + phi * (l_phi - lv);
          if (want_grad) {
            const double dlm = n - (n + phi) * muv / v;
            alm += dlm;
            aphi += dpsi_[yo.unique_idx] + l_phi + 1.0 - lv - (n + phi) / v;
            alg1 += 1.0;
            if (e > 0.0) {
              albk += dlm * e;
              ashk -= dlm * lb[k];
            }
          }
        } else {
          const double l0nb = phi * (l_phi - lv);
          const double a_zero = lg;
          const double b_zero = lg1 + l0nb;
          const double m = std::max(a_zero, b_zero);
          const double w_gate = std::exp(a_zero - m);
          const double w_nb = std::exp(b_zero - m);
          const double denom = w_gate + w_nb;
          s += m + std::log(denom);
          if (want_grad) {
            const double w2 = w_nb / denom;
            const double w1 = w_gate / denom;
            const double dl0nb_dlm = -phi * muv / v;
            alm += w2 * dl0nb_dlm;
            aphi += w2 * (l_phi + 1.0 - lv - phi / v);
            alg += w1;
            alg1 += w2;
            if (e > 0.0) {
              albk += w2 * dl0nb_dlm * e;
              ashk -= w2 * dl0nb_dlm * lb[k];
            }
          }
        }
      }
      const double term = log_omega[k] + s;
      s_k_[k] = term;
      a_lm_[k] = alm;
      a_lg_[k] = alg;
      a_lg1_[k] = alg1;
      a_phi_[k] = aphi;
      a_lb_[k] = albk;
      a_sh_[k] = ashk;
      max_term = std::max(max_term, term);
    }

    if (!std::isfinite(max_term)) {
      nonfinite_term_ = "loglik[" + rec.id + "]";
      return kNegInf;
    }
    double denom = 0.0;
    for (int k = 0; k < k_total; ++k) denom += std::exp(s_k_[k] - max_term);
    const double l_i = max_term + std::log(denom);
    loglik += l_i;

    if (want_grad) {
      double glmu = 0.0, glg = 0.0, glg1 = 0.0;
      auto& g_omega = pd.success ? g_omega_s_ : g_omega_f_;
      for (int k = 0; k < k_total; ++k) {
        const double rho = std::exp(s_k_[k] - l_i);
        glmu += rho * a_lm_[k];
        glg += rho * a_lg_[k];
        glg1 += rho * a_lg1_[k];
        g_phi_acc += rho * a_phi_[k];
        g_lb_[k] += rho * a_lb_[k];
        g_shift_[k] += rho * a_sh_[k];
        g_omega[k] += rho;  // d/d log omega_k; divided by omega later
      }
      if (science) {
        if (pd.success) grad[lay.beta + pd.group] += glmu;
        grad[lay.bias + pd.group] += glmu;
      } else {
        for (int j = 0; j < n_coef; ++j) grad[lay.beta + j] += glmu * rec.features[j];
        grad[lay.bias] += glmu;
      }
      // likelihood + gate prior + Jacobian, all through d(log g)/du = 1-g,
      // d(log(1-g))/du = -g
      grad[lay.gate + i] = (glg + shape_a - 1.0) * (1.0 - g) -
                           (glg1 + shape_b - 1.0) * g + (1.0 - 2.0 * g);
    }
  }

  const double total = prior + loglik + log_jac;
  if (!std::isfinite(total)) {
    if (nonfinite_term_.empty())
      nonfinite_term_ = std::isfinite(prior) ? "log_jacobian" : "log_prior";
    return total;
  }
  if (!want_grad) return total;

  // ---- assemble remaining gradient blocks ----
  // lambda_ridge
  double dp_dlambda = -2.0 * lambda / (1.0 + lambda * lambda);
  dp_dlambda += -0.5 * n_coef / lambda + 0.5 * sum_dev2 / (lambda * lambda);
  grad[lay.lambda_ridge] = dp_dlambda * lambda + 1.0;

  // alpha: Beta(1,10) score becomes -9*alpha after the logistic chain
  const double dir_dalpha =
      2.0 * kd * (digamma(alpha * kd) - digamma(alpha)) + sum_log_omega_s + sum_log_omega_f;
  grad[lay.alpha] = -9.0 * alpha + dir_dalpha * alpha * (1.0 - alpha) + (1.0 - 2.0 * alpha);

  // simplexes: likelihood responsibilities (per log omega) plus Dirichlet score
  for (int k = 0; k < k_total; ++k) {
    g_omega_s_[k] = (g_omega_s_[k] + alpha - 1.0) / omega_s_[k];
    g_omega_f_[k] = (g_omega_f_[k] + alpha - 1.0) / omega_f_[k];
  }
  stick_backward(g_omega_s_, std::span(stick_z_).subspan(0, n_sticks),
                 std::span(stick_r_).subspan(0, n_sticks),
                 grad.subspan(lay.omega_s, n_sticks));
  stick_backward(g_omega_f_, std::span(stick_z_).subspan(n_sticks, n_sticks),
                 std::span(stick_r_).subspan(n_sticks, n_sticks),
                 grad.subspan(lay.omega_f, n_sticks));

  for (int k = 0; k < k_total; ++k) {
    const double base_k = std::exp(lb[k]);
    const double shift_k = std::exp(u_sh[k]);
    grad[lay.base + k] = (a0 - 1.0) - b0 * base_k + 1.0 + g_lb_[k];
    grad[lay.shift + k] = (-1.0 / s0 + g_shift_[k]) * shift_k + 1.0;
  }

  if (science) {
    double g_bhat = -beta_hat;
    for (int j = 0; j < n_coef; ++j) {
      const double d = beta[j] - beta_hat;
      grad[lay.beta + j] += -d / lambda;
      g_bhat += d / lambda;
    }
    grad[lay.beta_hat] = g_bhat;
  } else {
    for (int j = 0; j < n_coef; ++j) grad[lay.beta + j] += -beta[j] / lambda;
  }
  for (int j = 0; j < lay.n_bias; ++j)
    grad[lay.bias + j] += -2.0 * bias[j] / (1.0 + bias[j] * bias[j]);

  // gate hyper parameters
  const double nd = static_cast<double>(n_papers);
  const double psi_a = digamma(shape_a);
  const double psi_b = digamma(shape_b);
  const double psi_k = digamma(shape_a + shape_b);
  const double score_a = nd * (psi_k - psi_a) + sum_lg;   // d prior / d shape_a
  const double score_b = nd * (psi_k - psi_b) + sum_lg1;  // d prior / d shape_b
  const double dp_dgmu = gate_kappa * (score_a - score_b);
  const double dp_dgk = gate_mu * score_a + (1.0 - gate_mu) * score_b;
  grad[lay.gate_mu] = dp_dgmu * gate_mu * (1.0 - gate_mu) + (1.0 - 2.0 * gate_mu);
  grad[lay.gate_kappa] = (dp_dgk - 20.0) * gate_kappa + 1.0;

  // phi
  const double dp_dphi = -2.0 * phi / (25.0 + phi * phi);
  grad[lay.phi] = (dp_dphi + g_phi_acc) * phi + 1.0;

  return total;
}

}  // namespace citerate::infer
