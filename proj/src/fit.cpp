#include "citerate/fit.hpp"

#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "citerate/errors.hpp"
#include "citerate/grad.hpp"
#include "citerate/model.hpp"

namespace citerate::infer {

namespace {

// Draw a starting point from the priors and keep it only if both the joint
// and its gradient are finite there.
std::vector<double> initial_point(JointModel& jm, const ModelConfig& cfg, int n_papers,
                                  std::uint64_t seed, int chain) {
  RngStream rng(seed, 0x10000u + static_cast<std::uint64_t>(chain));
  std::vector<double> grad(jm.dim());
  for (int attempt = 0; attempt < 10; ++attempt) {
    const ConstrainedParams p = model::sample_prior(cfg, n_papers, rng);
    std::vector<double> theta = model::unconstrain(p, jm.layout());
    const double v = jm.value_and_grad(theta, grad);
    if (!std::isfinite(v)) continue;
    bool ok = true;
    for (double g : grad)
      if (!std::isfinite(g)) {
        ok = false;
        break;
      }
    if (ok) return theta;
  }
  std::ostringstream os;
  os << "fit: no finite prior initialization for chain " << chain << " after 10 attempts";
  throw inference_error(os.str());
}

}  // namespace

FitResult fit(const Dataset& data, const ModelConfig& cfg_in, const SamplerConfig& sc) {
  sc.validate();
  if (data.papers.empty()) throw data_error("fit: dataset is empty");

  ModelConfig cfg = cfg_in;
  if (cfg.group_names.empty()) cfg.group_names = data.group_names;
  if (cfg.components < 1 || cfg.horizon < 1)
    throw config_error("fit: components and horizon must be >= 1");

  const int n_papers = static_cast<int>(data.size());
  JointModel probe(data, cfg);
  const int dim = probe.dim();

  struct ChainSlot {
    ChainOutput out;
    std::exception_ptr error;
  };
  std::vector<ChainSlot> slots(sc.chains);

  auto run_chain = [&](int c) {
    try {
      JointModel jm(data, cfg);  // per-thread scratch and caches
      const std::vector<double> init = initial_point(jm, cfg, n_papers, sc.seed, c);
      LogDensityGradient target = [&jm](std::span<const double> q, std::span<double> g) {
        return jm.value_and_grad(q, g);
      };
      slots[c].out = nuts_chain(target, dim, init, sc, c);
    } catch (...) {
      slots[c].error = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(sc.chains);
  for (int c = 0; c < sc.chains; ++c) threads.emplace_back(run_chain, c);
  for (auto& t : threads) t.join();
  for (auto& s : slots)
    if (s.error) std::rethrow_exception(s.error);

  FitResult result;
  PosteriorDraws& pd = result.draws;
  pd.names = model::constrained_names(cfg, data);
  pd.n_params = pd.names.size();
  pd.n_chains = sc.chains;

  const auto& lay = probe.layout();
  const int retained = sc.retained_per_chain();
  pd.values.reserve(static_cast<std::size_t>(retained) * sc.chains * pd.n_params);
  for (int c = 0; c < sc.chains; ++c) {
    const ChainOutput& out = slots[c].out;
    for (int i = 0; i < retained; ++i) {
      std::span<const double> theta(out.draws.data() + static_cast<std::size_t>(i) * dim,
                                    dim);
      const ConstrainedParams p = model::constrain(theta, lay, nullptr);
      std::vector<double> row = model::flatten_constrained(p, lay);
      pd.values.insert(pd.values.end(), row.begin(), row.end());
      pd.chain_id.push_back(c);
      pd.divergent.push_back(out.divergent[i]);
      pd.step_size.push_back(out.step_size);
    }
    const double frac = static_cast<double>(out.n_divergent) / sc.draws;
    if (frac > 0.25) {
      std::ostringstream os;
      os << "chain " << c << ": " << 100.0 * frac
         << "% divergent transitions; results are unreliable";
      pd.warnings.push_back(os.str());
    }
  }

  result.diagnostics = diagnostics(pd);
  return result;
}

}  // namespace citerate::infer
