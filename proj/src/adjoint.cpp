#include "mfg/adjoint.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <memory>

#include "mfg/errors.hpp"
#include "mfg/operators.hpp"

namespace mfg {

DriftModel stationary_problem(const HamiltonianModel& model, const MFGState& s) {
  struct Hold {
    HamiltonianModel model;
    MFGState state;
    HamiltonianModel::Context ctx;
  };
  auto h = std::make_shared<Hold>(Hold{model, s, {}});
  h->ctx = h->model.context(h->state.m, h->state.V);
  DriftModel fm;
  fm.F = [h](const TorusGrid&, Index j, const PVec& p) {
    return h->model.eval(h->ctx, j, p) - h->state.hbar;
  };
  fm.dpF = [h](const TorusGrid&, Index j, const PVec& p) {
    return h->model.grad_p(h->ctx, j, p);
  };
  return fm;
}

AdjointRun evolve_adjoint(const DriftModel& fmodel, const ScalarField& w, Index x0,
                          AdjointOptions opts) {
  const TorusGrid& grid = w.grid();
  if (x0 < 0 || x0 >= grid.size())
    throw ConfigError("adjoint source node " + std::to_string(x0) + " outside the grid");
  if (opts.steps < 1 || opts.T <= 0.0) throw ConfigError("adjoint horizon and steps must be positive");

  AdjointRun run;
  run.grid = grid;
  run.x0 = x0;
  run.T = opts.T;
  run.K = opts.steps;
  run.dt = opts.T / opts.steps;
  const double r = opts.r > 0.0 ? opts.r : grid.dim() + 1;
  run.q = r / (r - 1.0);
  run.w = w;

  VectorField dw = gradient(w);
  run.drift = VectorField(grid);
  double max_drift = 0.0;
  for (Index j = 0; j < grid.size(); ++j) {
    PVec b = fmodel.dpF(grid, j, dw.at(j));
    run.drift.set(j, b);
    max_drift = std::max(max_drift, b.lpNorm<Eigen::Infinity>());
  }
  const double h = grid.spacing();
  run.dt_within_m_matrix_bound = run.dt <= h * h / (2.0 * grid.dim() + h * max_drift);

  SpMat M(grid.size(), grid.size());
  {
    SpMat id(grid.size(), grid.size());
    id.setIdentity();
    M = id - run.dt * fp_matrix(run.drift);
  }
  Eigen::SparseLU<SpMat> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw SolveError("adjoint step factorization failed");

  const double vol = grid.cell_volume();
  const double peak = 1.0 / vol;
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(grid.size());
  rho[x0] = peak;
  run.slices.push_back(rho);

  ScalarField dw2(grid);
  for (Index j = 0; j < grid.size(); ++j) dw2[j] = dw.at(j).squaredNorm();

  for (int k = 1; k <= run.K; ++k) {
    rho = lu.solve(rho);
    if (lu.info() != Eigen::Success) throw SolveError("adjoint step solve failed");
    const double undershoot = rho.minCoeff();
    if (undershoot < -opts.undershoot_tol * peak) {
      std::string msg = "adjoint density undershoot " + std::to_string(undershoot) +
                        ": dt too large, rerun with more steps";
      if (!run.dt_within_m_matrix_bound)
        msg += " (dt exceeds the M-matrix bound h^2/(2d + h max|DpF|))";
      throw SolveError(msg);
    }
    AdjointStepRow row;
    row.t = k * run.dt;
    row.mass = vol * rho.sum();
    row.rho_lq = std::pow(vol * rho.cwiseAbs().array().pow(run.q).sum(), 1.0 / run.q);
    row.dw2_rho = vol * dw2.values().dot(rho);
    run.rows.push_back(row);
    run.slices.push_back(rho);
  }
  return run;
}

double representation_check(const DriftModel& fmodel, const ScalarField& w, const AdjointRun& run,
                            TimeQuadrature quadrature) {
  const TorusGrid& grid = w.grid();
  const double vol = grid.cell_volume();
  VectorField dw = gradient(w);

  // F - Dw . DpF does not depend on time; evaluate it once.
  Eigen::VectorXd integrand(grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    PVec p = dw.at(j);
    integrand[j] = fmodel.F(grid, j, p) - p.dot(fmodel.dpF(grid, j, p));
  }

  double time_integral = 0.0;
  for (int k = 0; k < run.K; ++k) {
    double weight;
    if (quadrature == TimeQuadrature::RightEndpoint)
      weight = vol * integrand.dot(run.slices[k + 1]);
    else
      weight = 0.5 * vol * integrand.dot(run.slices[k] + run.slices[k + 1]);
    time_integral += run.dt * weight;
  }
  const double terminal = vol * w.values().dot(run.slices[run.K]);
  return time_integral + terminal - w[run.x0];
}

OscillationPanel oscillation_bound_panel(const DriftModel&, const ScalarField& w,
                                         const AdjointRun& run) {
  OscillationPanel panel;
  for (const auto& row : run.rows) {
    panel.dw2_rho += run.dt * row.dw2_rho;
    panel.rho_l1lq += run.dt * row.rho_lq;
  }
  panel.osc_w = w.max() - w.min();
  return panel;
}

}  // namespace mfg
