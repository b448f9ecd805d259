#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/state.hpp"

namespace mfg {

/// Stationary problem Delta w + F(x, Dw) = 0 driving an adjoint run.
struct DriftModel {
  std::function<double(const TorusGrid&, Index, const PVec&)> F;
  std::function<PVec(const TorusGrid&, Index, const PVec&)> dpF;
};

/// F(x, p) = H_lambda(x, p, m, V) - Hbar instantiated from an MFG state.
DriftModel stationary_problem(const HamiltonianModel& model, const MFGState& s);

struct AdjointOptions {
  double T = 1.0;
  int steps = 200;
  /// Lq reporting exponent comes from q = r/(r-1); r <= 0 selects r = d + 1.
  double r = 0.0;
  /// Undershoot tolerance relative to the initial peak 1/h^d.
  double undershoot_tol = 1e-12;
};

struct AdjointStepRow {
  double t = 0.0;
  double mass = 0.0;      // h^d sum rho
  double rho_lq = 0.0;    // discrete Lq norm of the slice
  double dw2_rho = 0.0;   // int |Dw|^2 rho dx
};

struct AdjointRun {
  TorusGrid grid;
  Index x0 = 0;
  double T = 1.0;
  int K = 0;
  double dt = 0.0;
  double q = 0.0;
  bool dt_within_m_matrix_bound = false;
  ScalarField w;
  VectorField drift;                   // D_p F(x, Dw)
  std::vector<Eigen::VectorXd> slices; // rho^0 .. rho^K
  std::vector<AdjointStepRow> rows;    // one row per step k = 1..K
};

/// Implicit Euler on the transpose operator: (Id - dt A^T) rho^{k+1} = rho^k
/// with A phi = Delta phi + D_pF . D phi, started from the scaled indicator
/// at x0. Mass is conserved because A annihilates constants.
AdjointRun evolve_adjoint(const DriftModel& fmodel, const ScalarField& w, Index x0,
                          AdjointOptions opts = {});

enum class TimeQuadrature { RightEndpoint, Midpoint };

/// RHS - w(x0) for the representation formula
///   w(x0) = int_0^T int (F(x,Dw) - Dw . DpF(x,Dw)) rho dx dt + int w rho(.,T) dx.
/// Right-endpoint time quadrature makes the identity exact up to the
/// stationary residual of w; the midpoint variant is O(dt).
double representation_check(const DriftModel& fmodel, const ScalarField& w, const AdjointRun& run,
                            TimeQuadrature quadrature = TimeQuadrature::RightEndpoint);

struct OscillationPanel {
  double dw2_rho = 0.0;    // int_0^T int |Dw|^2 rho dx dt
  double rho_l1lq = 0.0;   // int_0^T ||rho(.,t)||_q dt
  double osc_w = 0.0;
};

OscillationPanel oscillation_bound_panel(const DriftModel& fmodel, const ScalarField& w,
                                         const AdjointRun& run);

}  // namespace mfg
