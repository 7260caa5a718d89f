#pragma once

#include <optional>
#include <string>
#include <vector>

#include "citerate/nuts.hpp"

namespace citerate::infer {

struct ParamDiag {
  std::string name;
  std::optional<double> rhat;  // unavailable with a single chain or zero variance
  double ess = 0.0;            // 0 for constant chains
};

/// Split R-hat (Gelman et al.) and effective sample size via Geyer's initial
/// monotone sequence, per parameter.  R-hat requires at least 2 chains with
/// at least 4 draws each; otherwise it is reported as unavailable (never
/// defaulted to 1.0).
std::vector<ParamDiag> diagnostics(const PosteriorDraws& pd);

void write_diagnostics_csv(const std::vector<ParamDiag>& diags, const std::string& path);

}  // namespace citerate::infer
