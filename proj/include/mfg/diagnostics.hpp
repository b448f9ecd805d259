#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfg/hamiltonian.hpp"
#include "mfg/state.hpp"

namespace mfg {

/// Ordered scalar map; the key order is the CSV column order.
class DiagnosticsReport {
 public:
  void set(const std::string& key, double value);
  double get(const std::string& key) const;
  bool has(const std::string& key) const;
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

/// Hbar - int (H - V.Du) dm. At a converged state this reduces to a pairing
/// of the discrete residuals with (m, u), so it sits at the residual scale.
double energy_identity_gap(const HamiltonianModel& model, const MFGState& s);

/// <m, transport(V) phi> for the multiplier test functions phi. Keys:
/// "ln_m", "m^<r>" per requested exponent, "abs_ln_m^<l>" per requested
/// power, and "inv_m".
std::vector<std::pair<std::string, double>> multiplier_identity_gaps(
    const ScalarField& m, const VectorField& V, const std::vector<double>& r_list,
    const std::vector<double>& lnm_powers = {});

/// Discrete norms and scalar observables of a candidate state.
DiagnosticsReport norm_panel(const HamiltonianModel& model, const MFGState& s);

struct MonotonicityOptions {
  std::optional<double> theta;  // default min(sigma1, eta0)/2 with sigma1 = min(1, sigma)
  double c_r = 12.0;
};

struct MonotonicityResult {
  double form_value = 0.0;       // H_lambda,I(Q, f, W)
  double margin = 0.0;           // form - theta (int m|Q|^2 + int f^2) + c_r int R^2 m
  double defect_m_norm2 = 0.0;   // int |R|^2 dm with R = W - B0(Q) - B1(f) - B2(W)
  double theta = 0.0;
  double c_r = 12.0;
  bool f_mean_warning = false;   // int f != 0 beyond tolerance
};

MonotonicityResult monotonicity_form(const HamiltonianModel& model, const MFGState& s,
                                     const VectorField& Q, const ScalarField& f,
                                     const VectorField& W, MonotonicityOptions opts = {});

/// W solving the defect equation W = B0(Q) + B1(f) + B2(W); along such
/// directions the margin reduces to the bare coercivity of the form.
VectorField defect_free_direction(const HamiltonianModel& model, const MFGState& s,
                                  const VectorField& Q, const ScalarField& f);

/// Smallest margin over `samples` random (Q, f, W) directions, alternating
/// free and defect-free W; deterministic for a fixed seed.
double sample_monotonicity_margin(const HamiltonianModel& model, const MFGState& s, int samples,
                                  std::uint64_t seed, MonotonicityOptions opts = {});

struct DiagnosticsOptions {
  std::vector<double> r_list{0.5, 1.0, 2.0};
  int monotonicity_samples = 20;
  std::uint64_t seed = 12345;
  MonotonicityOptions monotonicity;
};

/// Full panel in the canonical key order.
DiagnosticsReport full_report(const HamiltonianModel& model, const MFGState& s,
                              const DiagnosticsOptions& opts = {});

/// CSV with a mandatory header row and 17-significant-digit decimals.
void write_csv_header(std::ostream& os, const DiagnosticsReport& report,
                      const std::vector<std::string>& prefix_columns = {});
void write_csv_row(std::ostream& os, const DiagnosticsReport& report,
                   const std::vector<double>& prefix_values = {});
std::string format_double(double v);

}  // namespace mfg
