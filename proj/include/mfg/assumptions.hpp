#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfg/hamiltonian.hpp"

namespace mfg {

enum class Suite { A, D, H, C };

Suite suite_from_string(const std::string& s);
std::string suite_name(Suite s);

struct SamplerConfig {
  int dim = 1;
  int n = 16;               // grid carrying the sampled x points and test fields
  int samples = 10000;      // pointwise (x, p, environment) draws
  double p_radius = 5.0;
  int field_samples = 8;    // random (m, V) environments and test directions
  std::uint64_t seed = 20240915;
  double tolerance = 1e-9;  // a hypothesis passes iff worst margin >= -tolerance
  double fd_step = 1e-6;    // relative step for central finite differences
};

struct CandidateConstants {
  double C = 2.0;
  double c = 0.5;
  double delta = 0.0;
  double delta0 = 1.0;
  double kappa = 1.0;
  double sigma = 1.0;
  double growth_beta = 1.0;  // exponent in |H_x| <= C + C |p|^beta
  double epsilon = 0.0;      // velocity-energy weight in the special-form bounds
  double alpha0 = 0.1;       // lower bound for the anisotropy function
  double theta = 0.5;        // coercivity constant for the C-suite form
};

struct HypothesisResult {
  std::string id;
  std::string statement;
  double worst_margin = 0.0;
  bool passed = false;
  // witness of the worst margin
  Index witness_node = -1;
  PVec witness_p;
  int witness_env = -1;
};

struct AssumptionReport {
  Suite suite = Suite::A;
  CandidateConstants constants;
  std::vector<HypothesisResult> results;
  bool all_passed() const;
  const HypothesisResult* find(const std::string& id) const;
};

/// Sampled falsification of the hypothesis suite: evaluates both sides of
/// each inequality at random (x, p, m, V) draws and records the worst margin.
/// This refutes or corroborates; it proves nothing.
AssumptionReport check_assumptions(const HamiltonianModel& model, Suite suite,
                                   const SamplerConfig& cfg, const CandidateConstants& constants);

void print_report(std::ostream& os, const AssumptionReport& report);

}  // namespace mfg
