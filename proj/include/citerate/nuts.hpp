#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace citerate::infer {

struct SamplerConfig {
  int warmup = 500;        // burn-in iterations, adaptation enabled
  int draws = 2250;        // post-warmup iterations
  int thin = 3;            // keep every thin-th post-warmup draw
  int chains = 4;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 20260314;

  int retained_per_chain() const { return draws / thin; }
  void validate() const;  // throws config_error
};

/// Matrix of retained draws with parameter naming, chain ids, and per-draw
/// divergence flags.  Values are in whatever space the producer used
/// (constrained space for model fits).
struct PosteriorDraws {
  std::vector<std::string> names;
  std::size_t n_params = 0;
  std::vector<double> values;  // row-major, n_draws() x n_params
  std::vector<int> chain_id;
  std::vector<std::uint8_t> divergent;
  std::vector<double> step_size;
  std::vector<std::string> warnings;
  int n_chains = 0;

  std::size_t n_draws() const { return n_params == 0 ? 0 : values.size() / n_params; }
  double at(std::size_t draw, std::size_t param) const {
    return values[draw * n_params + param];
  }
  std::optional<std::size_t> column_index(const std::string& name) const;
  std::vector<double> column(std::size_t param) const;
};

/// Columnar CSV exchange format: `chain`, `divergent`, `step_size`, then one
/// column per named parameter; one row per retained draw.  Round-trips
/// byte-identically (17 significant digits).
void write_draws_csv(const PosteriorDraws& pd, const std::string& path);
PosteriorDraws read_draws_csv(const std::string& path);

/// Log-density with gradient, the only interface the sampler needs.
/// Returns the log-density; fills grad (same length as the position).
using LogDensityGradient =
    std::function<double(std::span<const double>, std::span<double>)>;

/// No-U-Turn sampler: multinomial sampling over doubled trees, dual-averaging
/// step-size adaptation toward target_accept, and diagonal mass-matrix
/// estimation over expanding warm-up windows (Hoffman & Gelman 2014;
/// Betancourt 2017 for the multinomial scheme).
///
/// Runs sc.chains chains sequentially from inits[c] (inits.size() must be 1
/// or sc.chains); deterministic given sc.seed.  Divergent transitions are
/// recorded per draw, never dropped.  A chain with more than 25% post-warmup
/// divergences appends a warning.  Throws inference_error when step-size
/// adaptation fails.
PosteriorDraws nuts_sample(const LogDensityGradient& target, int dim,
                           const std::vector<std::vector<double>>& inits,
                           const SamplerConfig& sc);

/// Diagnostic probe: integrate `steps` leapfrog steps of size eps from
/// (q0, p0) under a unit metric and return the largest absolute Hamiltonian
/// drift along the trajectory.  Exercises the same integrator the sampler
/// uses.
double hamiltonian_drift(const LogDensityGradient& target, std::span<const double> q0,
                         std::span<const double> p0, double eps, int steps);

/// Single-chain variant used by fit() to parallelize across threads.
struct ChainOutput {
  std::vector<double> draws;  // retained x dim
  std::vector<std::uint8_t> divergent;
  double step_size = 0.0;
  int n_divergent = 0;
  std::vector<double> inv_metric;
};
ChainOutput nuts_chain(const LogDensityGradient& target, int dim,
                       std::span<const double> init, const SamplerConfig& sc,
                       int chain_index);

}  // namespace citerate::infer
