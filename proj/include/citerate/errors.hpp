#pragma once

#include <stdexcept>
#include <string>

namespace citerate {

/// Malformed or inconsistent input data (CSV rows, unknown labels, bad masks).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (unsupported family, bad sampler settings, layout mismatch).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Inference failed (step size adaptation, non-finite initialization).
class inference_error : public std::runtime_error {
 public:
  explicit inference_error(const std::string& what) : std::runtime_error(what) {}
};

/// Remote service failure (HTTP errors, unknown paper ids).
class ingest_error : public std::runtime_error {
 public:
  explicit ingest_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace citerate
