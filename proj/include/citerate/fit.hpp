#pragma once

#include "citerate/diagnostics.hpp"
#include "citerate/nuts.hpp"
#include "citerate/types.hpp"

namespace citerate::infer {

struct FitResult {
  PosteriorDraws draws;              // constrained space, labeled columns
  std::vector<ParamDiag> diagnostics;
};

/// End-to-end fit: validate, initialize each chain from a prior draw
/// (retried up to 10 times while the joint or its gradient is non-finite),
/// run the chains concurrently, and return labeled constrained-space draws
/// with convergence diagnostics embedded.
FitResult fit(const Dataset& data, const ModelConfig& cfg, const SamplerConfig& sc);

}  // namespace citerate::infer
