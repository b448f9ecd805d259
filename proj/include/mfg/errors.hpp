#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace mfg {

/// Bad configuration or malformed input file. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside a model's domain, e.g. a nonpositive density under a
/// log or power coupling. The message names the offending node.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver failure (Newton stall, diverged fixed point, singular system,
/// continuation step underflow). The CLI maps this to exit code 2.
class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what,
                      double best_residual = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace mfg
