#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <string>
#include <vector>

#include "mfg/diagnostics.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/operators.hpp"
#include "mfg/state.hpp"

namespace mfg {

enum class LinearSolverKind { Auto, SparseDirect, IterativeRestart };

struct ContinuationConfig {
  double lambda_step0 = 0.1;
  double step_growth = 1.5;
  double step_cap = 0.25;
  int max_halvings = 10;
  double newton_tol = 1e-10;
  int max_newton_iters = 30;
  LinearSolverKind linear_solver = LinearSolverKind::Auto;
  double tau = 0.9;  // fraction-to-boundary damping for the density
  bool record_diagnostics = true;
  DiagnosticsOptions diagnostics;
  /// Invoked at every accepted lambda with the accepted state.
  std::function<void(double, const MFGState&)> on_accept;
};

struct TraceEntry {
  double lambda = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
  DiagnosticsReport diagnostics;
  double monotonicity_margin = std::numeric_limits<double>::quiet_NaN();
  bool monotonicity_negative = false;
};

struct ContinuationTrace {
  std::vector<TraceEntry> entries;
  bool success = false;
  std::string failure;  // set when the path stalls
};

struct ContinuationResult {
  MFGState state;
  ContinuationTrace trace;
};

/// The lambda = 0 member is solved exactly by (u, m, V, Hbar) = (0, 1, 0, -g(1)).
MFGState initial_state(const HamiltonianModel& model, const TorusGrid& grid);

/// Solves the pointwise fixed point V = D_p H(x, Du, m, V). Velocity
/// independent families evaluate directly; the velocity_coupled family uses
/// the closed form through the moment J = int V m dy; anything else runs a
/// damped fixed-point iteration (cap 200, divergence detected over 5 sweeps).
VectorField resolve_velocity(const HamiltonianModel& model, const ScalarField& u,
                             const ScalarField& m);

/// State with V re-resolved from (u, m); no normalization projection.
MFGState make_consistent(const HamiltonianModel& model, ScalarField u, ScalarField m, double hbar);

/// Residual layout (2N+2): HJB rows, FP rows, mass border, mean border.
/// Requires state.V consistent with resolve_velocity.
Eigen::VectorXd assemble_residual(const HamiltonianModel& model, const MFGState& s);
double residual_norm(const HamiltonianModel& model, const MFGState& s);

/// Bordered Newton matrix on unknowns (psi, f, hbar, mu) where mu is the
/// multiplier paired with the mass border. rhs is the negated residual.
struct LinearizedSystem {
  SpMat matrix;
  Eigen::VectorXd rhs;
};
LinearizedSystem assemble_linearization(const HamiltonianModel& model, const MFGState& s);

/// pair_count > 0 marks a two-field bordered system whose unknown blocks
/// [0, N) and [N, 2N) are interleaved before the incomplete factorization;
/// the saddle layout is hostile to pivot-free ILU otherwise.
Eigen::VectorXd solve_linear(const SpMat& M, const Eigen::VectorXd& rhs, LinearSolverKind kind,
                             int grid_dim, Index pair_count = 0);

struct NewtonResult {
  MFGState state;
  int iterations = 0;
  double residual = 0.0;
};
NewtonResult newton_solve(const HamiltonianModel& model, const MFGState& start,
                          const ContinuationConfig& cfg);

/// Natural continuation from lambda = 0 to 1 with adaptive steps.
ContinuationResult continuation_run(const HamiltonianModel& model, const TorusGrid& grid,
                                    const ContinuationConfig& cfg);

/// Independent brute-force oracle: alternate a frozen-density HJB solve, a
/// bordered linear FP solve, and 0.5 under-relaxation of the density.
MFGState picard_oracle(const HamiltonianModel& model, const TorusGrid& grid, double tol);

}  // namespace mfg
