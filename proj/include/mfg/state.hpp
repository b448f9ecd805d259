#pragma once

#include <iosfwd>

#include "mfg/grid.hpp"

namespace mfg {

/// Candidate solution tuple of the stationary system. Normalization
/// invariants at accepted states: int u = 0, int m = 1 (both to 1e-12),
/// min m > 0 strictly.
struct MFGState {
  ScalarField u;
  ScalarField m;
  VectorField V;
  double hbar = 0.0;

  const TorusGrid& grid() const { return u.grid(); }
};

/// Tolerance used when validating state normalization invariants.
inline constexpr double kStateNormTol = 1e-12;

/// Throws DomainError on violated invariants (non-finite fields, min m <= 0)
/// and SolveError on broken normalizations.
void validate_state(const MFGState& s, bool check_normalization = true);

/// Exact re-projection: subtract the mean of u, rescale m by its integral.
void project_normalizations(MFGState& s);

/// Checkpoint: one MFGFIELD block per field (u, m, then the V components)
/// followed by a line `HBAR <value>`.
void write_checkpoint(std::ostream& os, const MFGState& s);
MFGState read_checkpoint(std::istream& is);

}  // namespace mfg
