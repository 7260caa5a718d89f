#include "citerate/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "citerate/errors.hpp"
#include "citerate/rng.hpp"

namespace citerate::infer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxEnergyError = 1000.0;  // divergence threshold

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  double logp = 0.0;
};

// One leapfrog step of signed size eps under a diagonal metric; returns
// false when the log-density turns non-finite mid-step.
bool leapfrog_step(const LogDensityGradient& target, PhasePoint& z, double eps,
                   std::span<const double> inv_metric) {
  const std::size_t dim = z.q.size();
  for (std::size_t i = 0; i < dim; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  for (std::size_t i = 0; i < dim; ++i) z.q[i] += eps * inv_metric[i] * z.p[i];
  z.logp = target(z.q, z.grad);
  if (!std::isfinite(z.logp)) return false;
  for (std::size_t i = 0; i < dim; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  return true;
}

// Stan-style warm-up schedule: fast start buffer for step size, expanding
// slow windows for the metric, fast terminal buffer.
struct AdaptSchedule {
  int init_buffer = 75;
  int term_buffer = 50;
  int base_window = 25;
  int warmup = 0;

  explicit AdaptSchedule(int total) : warmup(total) {
    if (init_buffer + term_buffer + base_window > warmup) {
      init_buffer = static_cast<int>(0.15 * warmup);
      term_buffer = static_cast<int>(0.10 * warmup);
      base_window = warmup - init_buffer - term_buffer;
      if (base_window < 0) {
        init_buffer = term_buffer = 0;
        base_window = warmup;
      }
    }
  }
  bool in_slow_window(int iter) const {
    return warmup > 0 && base_window > 0 && iter >= init_buffer &&
           iter < warmup - term_buffer;
  }
  // Returns true when iter is the last iteration of a slow window.
  bool window_closes(int iter, int window_start, int window_size) const {
    const int end = window_start + window_size;
    if (iter + 1 >= warmup - term_buffer) return iter + 1 == warmup - term_buffer;
    return iter + 1 == end;
  }
};

struct Welford {
  long n = 0;
  std::vector<double> mean, m2;
  explicit Welford(int dim) : mean(dim, 0.0), m2(dim, 0.0) {}
  void add(std::span<const double> x) {
    ++n;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(n);
      m2[i] += d * (x[i] - mean[i]);
    }
  }
  void reset() {
    n = 0;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
  }
  // Regularized variance estimate, shrunk toward unit scale (as in Stan).
  void variance(std::vector<double>& out) const {
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double var = m2[i] / (nd - 1.0);
      out[i] = (nd / (nd + 5.0)) * var + 1e-3 * (5.0 / (nd + 5.0));
    }
  }
};

struct DualAveraging {
  double mu = 0.0, log_eps = 0.0, log_eps_bar = 0.0, h_bar = 0.0;
  double target = 0.8, gamma = 0.05, t0 = 10.0, kappa = 0.75;
  long m = 0;

  void restart(double eps, double target_accept) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = std::log(eps);
    h_bar = 0.0;
    m = 0;
    target = target_accept;
  }
  double update(double accept_stat) {
    ++m;
    const double md = static_cast<double>(m);
    const double w = 1.0 / (md + t0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept_stat);
    log_eps = mu - std::sqrt(md) / gamma * h_bar;
    const double x = std::pow(md, -kappa);
    log_eps_bar = x * log_eps + (1.0 - x) * log_eps_bar;
    return std::exp(log_eps);
  }
  double averaged() const { return std::exp(log_eps_bar); }
};

class Chain {
 public:
  Chain(const LogDensityGradient& target, int dim, std::span<const double> init,
        const SamplerConfig& sc, int chain_index)
      : target_(target),
        dim_(dim),
        sc_(sc),
        rng_(sc.seed, static_cast<std::uint64_t>(chain_index)),
        inv_metric_(dim, 1.0) {
    z_.q.assign(init.begin(), init.end());
    z_.p.assign(dim, 0.0);
    z_.grad.assign(dim, 0.0);
    z_.logp = target_(z_.q, z_.grad);
    if (!std::isfinite(z_.logp))
      throw inference_error("nuts: log density not finite at the initial point");
  }

  ChainOutput run() {
    ChainOutput out;
    const int retained = sc_.retained_per_chain();
    out.draws.reserve(static_cast<std::size_t>(retained) * dim_);
    out.divergent.reserve(retained);

    double eps = find_reasonable_epsilon();
    DualAveraging da;
    da.restart(eps, sc_.target_accept);

    AdaptSchedule sched(sc_.warmup);
    Welford welford(dim_);
    int window_start = sched.init_buffer;
    int window_size = sched.base_window;
    bool any_movement = (sc_.warmup == 0);

    for (int iter = 0; iter < sc_.warmup; ++iter) {
      const bool moved = transition(eps);
      any_movement = any_movement || moved;
      eps = da.update(last_accept_stat_);
      if (sched.in_slow_window(iter)) {
        welford.add(z_.q);
        if (sched.window_closes(iter, window_start, window_size) && welford.n >= 10) {
          welford.variance(inv_metric_);
          welford.reset();
          window_start = iter + 1;
          window_size *= 2;
          eps = find_reasonable_epsilon();
          da.restart(eps, sc_.target_accept);
        }
      }
    }
    if (sc_.warmup > 0 && !any_movement)
      throw inference_error("step size adaptation failed: no accepted proposal in warm-up");
    if (sc_.warmup > 0) eps = da.averaged();
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw inference_error("step size adaptation failed: non-finite step size");

    out.step_size = eps;
    for (int iter = 1; iter <= sc_.draws; ++iter) {
      transition(eps);
      if (divergent_) ++out.n_divergent;
      if (iter % sc_.thin == 0) {
        out.draws.insert(out.draws.end(), z_.q.begin(), z_.q.end());
        out.divergent.push_back(divergent_ ? 1 : 0);
      }
    }
    out.inv_metric = inv_metric_;
    return out;
  }

 private:
  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (int i = 0; i < dim_; ++i) k += p[i] * p[i] * inv_metric_[i];
    return 0.5 * k;
  }

  double hamiltonian(const PhasePoint& z) const { return z.logp - kinetic(z.p); }

  void sample_momentum(PhasePoint& z) {
    for (int i = 0; i < dim_; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
  }

  bool leapfrog(PhasePoint& z, double eps) {
    return leapfrog_step(target_, z, eps, inv_metric_);
  }

  double find_reasonable_epsilon() {
    // Hoffman & Gelman Algorithm 4: double/halve until the one-step
    // acceptance probability crosses 1/2.
    double eps = 1.0;
    PhasePoint z = z_;
    sample_momentum(z);
    const double h0 = hamiltonian(z);
    PhasePoint trial = z;
    double dh = -std::numeric_limits<double>::infinity();
    if (leapfrog(trial, eps)) dh = hamiltonian(trial) - h0;
    const double dir = (dh > std::log(0.5)) ? 1.0 : -1.0;
    for (int att = 0; att < 100; ++att) {
      trial = z;
      dh = -std::numeric_limits<double>::infinity();
      if (leapfrog(trial, eps)) dh = hamiltonian(trial) - h0;
      if (dir > 0.0 ? dh <= std::log(0.5) : dh > std::log(0.5)) return eps;
      eps *= (dir > 0.0) ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-17)
        throw inference_error("step size adaptation failed: no reasonable step size");
    }
    return eps;
  }

  struct Subtree {
    PhasePoint minus, plus, proposal;
    double log_weight = kNegInf;
    double sum_alpha = 0.0;
    long n_alpha = 0;
    bool ok = false;        // no u-turn, no divergence
    bool divergent = false;
  };

  bool no_uturn(const PhasePoint& minus, const PhasePoint& plus) const {
    double fwd = 0.0, bwd = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double dq = plus.q[i] - minus.q[i];
      fwd += dq * inv_metric_[i] * plus.p[i];
      bwd += dq * inv_metric_[i] * minus.p[i];
    }
    return fwd >= 0.0 && bwd >= 0.0;
  }

  Subtree build_tree(const PhasePoint& from, double eps, int depth, double h0) {
    Subtree tree;
    if (depth == 0) {
      PhasePoint z = from;
      const bool finite = leapfrog(z, eps);
      const double h = finite ? hamiltonian(z) : kNegInf;
      const double dh = h - h0;
      tree.divergent = !(dh > -kMaxEnergyError);
      tree.sum_alpha = std::isfinite(dh) ? std::min(1.0, std::exp(dh)) : 0.0;
      tree.n_alpha = 1;
      if (tree.divergent) {
        tree.ok = false;
        return tree;
      }
      tree.minus = z;
      tree.plus = std::move(z);
      tree.proposal = tree.plus;
      tree.log_weight = dh;
      tree.ok = true;
      return tree;
    }

    Subtree first = build_tree(from, eps, depth - 1, h0);
    if (!first.ok) return first;
    const PhasePoint& cont = (eps > 0.0) ? first.plus : first.minus;
    Subtree second = build_tree(cont, eps, depth - 1, h0);

    Subtree merged;
    merged.sum_alpha = first.sum_alpha + second.sum_alpha;
    merged.n_alpha = first.n_alpha + second.n_alpha;
    merged.divergent = second.divergent;
    if (!second.ok) {
      merged.ok = false;
      return merged;
    }
    merged.log_weight = log_sum_exp(first.log_weight, second.log_weight);
    // Multinomial sampling within the subtree: pick the new half with
    // probability proportional to its total weight.
    const double p_second = std::exp(second.log_weight - merged.log_weight);
    merged.proposal =
        (rng_.uniform() < p_second) ? std::move(second.proposal) : std::move(first.proposal);
    if (eps > 0.0) {
      merged.minus = std::move(first.minus);
      merged.plus = std::move(second.plus);
    } else {
      merged.minus = std::move(second.minus);
      merged.plus = std::move(first.plus);
    }
    merged.ok = no_uturn(merged.minus, merged.plus);
    return merged;
  }

  // One NUTS transition from z_; returns true when the position changed.
  bool transition(double eps) {
    sample_momentum(z_);
    const double h0 = hamiltonian(z_);
    PhasePoint minus = z_, plus = z_, proposal = z_;
    double log_sum_w = 0.0;  // weight of the initial point relative to itself
    double sum_alpha = 0.0;
    long n_alpha = 0;
    divergent_ = false;
    bool moved = false;

    for (int depth = 0; depth < sc_.max_tree_depth; ++depth) {
      const bool forward = rng_.uniform() < 0.5;
      const double dir_eps = forward ? eps : -eps;
      Subtree sub = build_tree(forward ? plus : minus, dir_eps, depth, h0);
      sum_alpha += sub.sum_alpha;
      n_alpha += sub.n_alpha;
      if (sub.divergent) divergent_ = true;
      if (!sub.ok) break;
      // Biased progressive sampling across doublings: favor the new subtree.
      const double p_new = std::exp(std::min(0.0, sub.log_weight - log_sum_w));
      if (rng_.uniform() < p_new) {
        proposal = sub.proposal;
        moved = true;
      }
      log_sum_w = log_sum_exp(log_sum_w, sub.log_weight);
      if (forward)
        plus = std::move(sub.plus);
      else
        minus = std::move(sub.minus);
      if (!no_uturn(minus, plus)) break;
    }

    last_accept_stat_ = (n_alpha > 0) ? sum_alpha / static_cast<double>(n_alpha) : 0.0;
    z_ = std::move(proposal);
    return moved;
  }

  const LogDensityGradient& target_;
  int dim_;
  SamplerConfig sc_;
  RngStream rng_;
  std::vector<double> inv_metric_;
  PhasePoint z_;
  double last_accept_stat_ = 0.0;
  bool divergent_ = false;
};

}  // namespace

void SamplerConfig::validate() const {
  if (warmup < 0 || draws < 1 || thin < 1 || chains < 1)
    throw config_error("sampler: warmup >= 0, draws/thin/chains >= 1 required");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw config_error("sampler: target_accept must lie in (0,1)");
  if (max_tree_depth < 1) throw config_error("sampler: max_tree_depth >= 1 required");
  if (draws / thin < 1) throw config_error("sampler: thinning retains no draws");
}

ChainOutput nuts_chain(const LogDensityGradient& target, int dim,
                       std::span<const double> init, const SamplerConfig& sc,
                       int chain_index) {
  Chain chain(target, dim, init, sc, chain_index);
  return chain.run();
}

double hamiltonian_drift(const LogDensityGradient& target, std::span<const double> q0,
                         std::span<const double> p0, double eps, int steps) {
  const std::vector<double> unit_metric(q0.size(), 1.0);
  PhasePoint z;
  z.q.assign(q0.begin(), q0.end());
  z.p.assign(p0.begin(), p0.end());
  z.grad.assign(q0.size(), 0.0);
  z.logp = target(z.q, z.grad);
  auto energy = [](const PhasePoint& s) {
    double k = 0.0;
    for (double p : s.p) k += p * p;
    return s.logp - 0.5 * k;
  };
  const double h0 = energy(z);
  double drift = 0.0;
  for (int i = 0; i < steps; ++i) {
    if (!leapfrog_step(target, z, eps, unit_metric))
      return std::numeric_limits<double>::infinity();
    drift = std::max(drift, std::abs(energy(z) - h0));
  }
  return drift;
}

std::optional<std::size_t> PosteriorDraws::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return j;
  return std::nullopt;
}

std::vector<double> PosteriorDraws::column(std::size_t param) const {
  std::vector<double> out(n_draws());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i, param);
  return out;
}

PosteriorDraws nuts_sample(const LogDensityGradient& target, int dim,
                           const std::vector<std::vector<double>>& inits,
                           const SamplerConfig& sc) {
  sc.validate();
  if (inits.empty()) throw config_error("nuts_sample: at least one init required");
  PosteriorDraws pd;
  pd.n_params = static_cast<std::size_t>(dim);
  pd.n_chains = sc.chains;
  pd.names.reserve(dim);
  for (int i = 0; i < dim; ++i) pd.names.push_back("theta[" + std::to_string(i) + "]");

  for (int c = 0; c < sc.chains; ++c) {
    const auto& init = inits[std::min<std::size_t>(c, inits.size() - 1)];
    ChainOutput out = nuts_chain(target, dim, init, sc, c);
    const std::size_t n = out.divergent.size();
    pd.values.insert(pd.values.end(), out.draws.begin(), out.draws.end());
    for (std::size_t i = 0; i < n; ++i) {
      pd.chain_id.push_back(c);
      pd.divergent.push_back(out.divergent[i]);
      pd.step_size.push_back(out.step_size);
    }
    if (n > 0) {
      const double frac =
          static_cast<double>(out.n_divergent) / static_cast<double>(sc.draws);
      if (frac > 0.25) {
        std::ostringstream os;
        os << "chain " << c << ": " << 100.0 * frac
           << "% divergent transitions; results are unreliable";
        pd.warnings.push_back(os.str());
      }
    }
  }
  return pd;
}

void write_draws_csv(const PosteriorDraws& pd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << "chain,divergent,step_size";
  for (const auto& n : pd.names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < pd.n_draws(); ++i) {
    out << pd.chain_id[i] << ',' << static_cast<int>(pd.divergent[i]);
    std::snprintf(buf, sizeof(buf), ",%.17g", pd.step_size[i]);
    out << buf;
    for (std::size_t j = 0; j < pd.n_params; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", pd.at(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw data_error("write failed for '" + path + "'");
}

PosteriorDraws read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  PosteriorDraws pd;
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty draws file '" + path + "'");
  std::stringstream header(line);
  std::string cell;
  std::vector<std::string> cols;
  while (std::getline(header, cell, ',')) cols.push_back(cell);
  if (cols.size() < 3 || cols[0] != "chain" || cols[1] != "divergent" ||
      cols[2] != "step_size")
    throw data_error("draws file '" + path + "': unexpected header");
  pd.names.assign(cols.begin() + 3, cols.end());
  pd.n_params = pd.names.size();
  int max_chain = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::getline(row, cell, ',');
    pd.chain_id.push_back(std::stoi(cell));
    max_chain = std::max(max_chain, pd.chain_id.back());
    std::getline(row, cell, ',');
    pd.divergent.push_back(static_cast<std::uint8_t>(std::stoi(cell)));
    std::getline(row, cell, ',');
    pd.step_size.push_back(std::stod(cell));
    while (std::getline(row, cell, ',')) pd.values.push_back(std::stod(cell));
  }
  pd.n_chains = max_chain + 1;
  if (pd.n_params > 0 && pd.values.size() % pd.n_params != 0)
    throw data_error("draws file '" + path + "': ragged rows");
  return pd;
}

}  // namespace citerate::infer
