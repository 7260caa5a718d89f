#include "citerate/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "citerate/errors.hpp"

namespace citerate::infer {

namespace {

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Autocovariance at lags 0..max_lag (biased, divisor n).
std::vector<double> autocovariance(const std::vector<double>& x, int max_lag) {
  const int n = static_cast<int>(x.size());
  const double m = mean_of(x);
  std::vector<double> acov(max_lag + 1, 0.0);
  for (int lag = 0; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (int i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    acov[lag] = s / static_cast<double>(n);
  }
  return acov;
}

std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) return std::nullopt;
  std::size_t n_min = chains.front().size();
  for (const auto& c : chains) n_min = std::min(n_min, c.size());
  if (n_min < 4) return std::nullopt;
  const std::size_t half = n_min / 2;

  std::vector<double> seq_means, seq_vars;
  for (const auto& c : chains) {
    std::vector<double> first(c.begin(), c.begin() + half);
    std::vector<double> second(c.end() - half, c.end());
    for (const auto& seq : {first, second}) {
      const double m = mean_of(seq);
      seq_means.push_back(m);
      seq_vars.push_back(var_of(seq, m));
    }
  }
  const double w = mean_of(seq_vars);
  const double grand = mean_of(seq_means);
  double b = 0.0;
  for (double m : seq_means) b += (m - grand) * (m - grand);
  b *= static_cast<double>(half) / static_cast<double>(seq_means.size() - 1);
  if (!(w > 0.0)) return std::nullopt;  // constant sequences
  const double nd = static_cast<double>(half);
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(var_plus / w);
}

// Effective sample size with Geyer's initial monotone positive sequence,
// combined across chains.
double ess(const std::vector<std::vector<double>>& chains) {
  const int m = static_cast<int>(chains.size());
  std::size_t n_min = chains.front().size();
  for (const auto& c : chains) n_min = std::min(n_min, c.size());
  const int n = static_cast<int>(n_min);
  if (n < 4) return 0.0;
  const int max_lag = n - 2;

  std::vector<std::vector<double>> acovs;
  std::vector<double> chain_means;
  double w = 0.0;
  for (const auto& c : chains) {
    std::vector<double> x(c.begin(), c.begin() + n);
    acovs.push_back(autocovariance(x, max_lag));
    chain_means.push_back(mean_of(x));
    w += acovs.back()[0] * static_cast<double>(n) / (n - 1.0);
  }
  w /= static_cast<double>(m);
  if (!(w > 0.0)) return 0.0;

  double var_plus = w * (n - 1.0) / n;
  if (m > 1) {
    const double grand = mean_of(chain_means);
    double b = 0.0;
    for (double cm : chain_means) b += (cm - grand) * (cm - grand);
    b /= static_cast<double>(m - 1);
    var_plus += b;
  }

  auto mean_acov = [&](int lag) {
    double s = 0.0;
    for (const auto& a : acovs) s += a[lag];
    return s / static_cast<double>(m);
  };

  // Geyer pairs Gamma_m = rho_{2m} + rho_{2m+1}: accumulate while positive,
  // enforcing a monotone non-increasing envelope; tau = 2*sum(Gamma) - 1.
  const double rho_1 = 1.0 - (w - mean_acov(1)) / var_plus;
  double pair_prev = 1.0 + rho_1;  // Gamma_0 with rho_0 = 1
  double pair_sum = pair_prev;
  for (int lag = 2; lag + 1 <= max_lag; lag += 2) {
    const double r0 = 1.0 - (w - mean_acov(lag)) / var_plus;
    const double r1 = 1.0 - (w - mean_acov(lag + 1)) / var_plus;
    double pair = r0 + r1;
    if (pair < 0.0) break;
    pair = std::min(pair, pair_prev);
    pair_sum += pair;
    pair_prev = pair;
  }
  const double tau = 2.0 * pair_sum - 1.0;
  const double total = static_cast<double>(m) * static_cast<double>(n);
  const double out = total / std::max(tau, 1.0 / std::log10(std::max(total, 10.0)));
  return std::min(out, total * std::log10(std::max(total, 10.0)));
}

}  // namespace

std::vector<ParamDiag> diagnostics(const PosteriorDraws& pd) {
  if (pd.n_draws() == 0) throw config_error("diagnostics: no draws");
  const int n_chains = pd.n_chains;
  std::vector<ParamDiag> out;
  out.reserve(pd.n_params);

  // Partition row indices by chain once.
  std::vector<std::vector<std::size_t>> rows(n_chains);
  for (std::size_t i = 0; i < pd.chain_id.size(); ++i)
    rows[pd.chain_id[i]].push_back(i);

  std::vector<std::vector<double>> chains(n_chains);
  for (std::size_t j = 0; j < pd.n_params; ++j) {
    for (int c = 0; c < n_chains; ++c) {
      chains[c].clear();
      chains[c].reserve(rows[c].size());
      for (std::size_t i : rows[c]) chains[c].push_back(pd.at(i, j));
    }
    ParamDiag d;
    d.name = pd.names[j];
    d.rhat = split_rhat(chains);
    d.ess = ess(chains);
    out.push_back(std::move(d));
  }
  return out;
}

void write_diagnostics_csv(const std::vector<ParamDiag>& diags, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "parameter,rhat,ess\n";
  for (const auto& d : diags) {
    out << d.name << ',';
    if (d.rhat)
      out << *d.rhat;
    else
      out << "NA";
    out << ',' << d.ess << '\n';
  }
}

}  // namespace citerate::infer
