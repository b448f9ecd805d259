#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfg/hamiltonian.hpp"
#include "mfg/solver.hpp"

namespace mfg {

/// Parsed run configuration. The file format is line oriented with nested
/// braced sections; unknown sections or keys are rejected with the offending
/// name and line number.
struct RunConfig {
  struct GridSection {
    int dim = 1;
    int n = 64;
  } grid;

  struct ModelSection {
    std::string family = "quadratic_log";
    std::string coupling;  // empty = family default
    double gamma = 1.0;
    double alpha = 0.0;
    double kappa = 1.0;
    double sigma = 1.0;
    CosineSeries potential;
    std::string potential_field;  // path to an MFGFIELD dump, alternative to cos lines
    CosineSeries aniso;
    std::vector<CosineSeries> drift = std::vector<CosineSeries>(3);
  } model;

  ContinuationConfig continuation;

  struct DiagnosticsSection {
    /// Empty selects the default exponent panel: 0.5, 1, 2, the power-model
    /// exponent 2 gamma - 1, and -0.1 for the inverse-power multiplier.
    std::vector<double> r_list;
    int monotonicity_samples = 20;
    std::uint64_t seed = 12345;
    std::optional<double> theta;
    double c_r = 12.0;
  } diagnostics;

  struct AdjointSection {
    double T = 1.0;
    int steps = 200;
    double r = 0.0;  // 0 = default d + 1
    Index x0 = 0;
    int dump_every = 0;
  } adjoint;

  struct OutputSection {
    std::string dir = ".";
  } output;
};

RunConfig parse_config(std::istream& is);
RunConfig parse_config_file(const std::string& path);

TorusGrid build_grid(const RunConfig& cfg);
HamiltonianModel build_model(const RunConfig& cfg);
/// Continuation config with the diagnostics section folded in.
ContinuationConfig build_continuation(const RunConfig& cfg);

}  // namespace mfg
