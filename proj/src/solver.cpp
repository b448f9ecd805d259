#include "mfg/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <unsupported/Eigen/IterativeSolvers>

namespace mfg {

namespace {
using Trip = Eigen::Triplet<double>;

void append_block(std::vector<Trip>& trips, const SpMat& block, Index row0, Index col0,
                  double scale = 1.0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trips.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

}  // namespace

MFGState initial_state(const HamiltonianModel& model, const TorusGrid& grid) {
  MFGState s;
  s.u = ScalarField(grid, 0.0);
  s.m = ScalarField(grid, 1.0);
  s.V = VectorField(grid, 0.0);
  s.hbar = -model.g(1.0);
  return s;
}

VectorField resolve_velocity(const HamiltonianModel& model, const ScalarField& u,
                             const ScalarField& m) {
  const TorusGrid& grid = u.grid();
  VectorField du = gradient(u);
  auto ctx0 = model.context(m);  // zero velocity moment: grad_p gives D_p h_lambda
  VectorField base(grid);
  for (Index j = 0; j < grid.size(); ++j) base.set(j, model.grad_p(ctx0, j, du.at(j)));

  if (!model.velocity_dependent()) return base;

  const double beta = model.beta();
  const double mass = integrate(m);

  if (model.family() == Family::VelocityCoupled) {
    const double denom = 1.0 - beta * mass;
    if (std::abs(denom) < 1e-12)
      throw SolveError("Id - B2 is singular: 1 - lambda*alpha*int(m) = " + std::to_string(denom));
    PVec J(grid.dim());
    for (int a = 0; a < grid.dim(); ++a)
      J[a] = integrate_against(base.component(a), m) / denom;
    VectorField V = base;
    for (int a = 0; a < grid.dim(); ++a)
      V.component(a).values().array() += beta * J[a];
    return V;
  }

  // Damped fixed-point iteration for the remaining velocity-dependent families.
  VectorField V = base;
  double prev_err = std::numeric_limits<double>::max();
  int bad_streak = 0;
  double last_ratio = 0.0;
  for (int it = 0; it < 200; ++it) {
    PVec J(grid.dim());
    for (int a = 0; a < grid.dim(); ++a) J[a] = integrate_against(V.component(a), m);
    VectorField next = base;
    double err = 0.0;
    for (Index j = 0; j < grid.size(); ++j) {
      PVec v = next.at(j) + beta * J;
      err = std::max(err, (v - V.at(j)).lpNorm<Eigen::Infinity>());
      next.set(j, v);
    }
    V = next;
    if (err <= 1e-12) return V;
    last_ratio = err / prev_err;
    bad_streak = (last_ratio >= 1.0) ? bad_streak + 1 : 0;
    if (bad_streak >= 5)
      throw SolveError("velocity fixed point diverged (error ratio " + std::to_string(last_ratio) +
                       ")");
    prev_err = err;
  }
  throw SolveError("velocity fixed point hit the 200 iteration cap (last ratio " +
                   std::to_string(last_ratio) + ")");
}

MFGState make_consistent(const HamiltonianModel& model, ScalarField u, ScalarField m,
                         double hbar) {
  MFGState s;
  s.V = resolve_velocity(model, u, m);
  s.u = std::move(u);
  s.m = std::move(m);
  s.hbar = hbar;
  return s;
}

Eigen::VectorXd assemble_residual(const HamiltonianModel& model, const MFGState& s) {
  const TorusGrid& grid = s.grid();
  const Index N = grid.size();
  auto ctx = model.context(s.m, s.V);
  VectorField du = gradient(s.u);
  ScalarField lap_u = laplacian(s.u);

  Eigen::VectorXd r(2 * N + 2);
  for (Index j = 0; j < N; ++j)
    r[j] = lap_u[j] + model.eval(ctx, j, du.at(j)) - s.hbar;
  r.segment(N, N) = fp_matrix(s.V) * s.m.values();
  r[2 * N] = integrate(s.m) - 1.0;
  r[2 * N + 1] = integrate(s.u);
  return r;
}

double residual_norm(const HamiltonianModel& model, const MFGState& s) {
  return assemble_residual(model, s).lpNorm<Eigen::Infinity>();
}

LinearizedSystem assemble_linearization(const HamiltonianModel& model, const MFGState& s) {
  const TorusGrid& grid = s.grid();
  const Index N = grid.size();
  const int d = grid.dim();
  const double vol = grid.cell_volume();
  auto ctx = model.context(s.m, s.V);
  VectorField du = gradient(s.u);

  std::vector<SpMat> D(d);
  for (int a = 0; a < d; ++a) D[a] = centered_diff_matrix(grid, a);
  SpMat A = transport_matrix(s.V);

  // Pointwise Hessian of H in p; scalar fields b0(c,e).
  std::vector<std::vector<Eigen::VectorXd>> b0(d, std::vector<Eigen::VectorXd>(d));
  for (int c = 0; c < d; ++c)
    for (int e = 0; e < d; ++e) b0[c][e].resize(N);
  for (Index j = 0; j < N; ++j) {
    PMat hpp = model.hess_pp(ctx, j, du.at(j));
    for (int c = 0; c < d; ++c)
      for (int e = 0; e < d; ++e) b0[c][e][j] = hpp(c, e);
  }

  std::vector<Trip> trips;
  trips.reserve(static_cast<size_t>(8 * (d + 1) * N));

  // HJB block: A psi - g'(m) f - hbar, plus nonlocal couplings below.
  append_block(trips, A, 0, 0);
  for (Index j = 0; j < N; ++j) {
    trips.emplace_back(j, N + j, -model.g_prime(s.m[j], j));
    trips.emplace_back(j, 2 * N, -1.0);
  }

  // FP block: A^T f - sum_c D_c( m (B0 Dpsi)_c ), plus multiplier column.
  append_block(trips, SpMat(A.transpose()), N, N);
  for (int c = 0; c < d; ++c) {
    SpMat Mc(N, N);
    {
      std::vector<Trip> t2;
      for (int e = 0; e < d; ++e) {
        SpMat scaled = Eigen::VectorXd(s.m.values().array() * b0[c][e].array()).asDiagonal() * D[e];
        append_block(t2, scaled, 0, 0);
      }
      Mc.setFromTriplets(t2.begin(), t2.end());
    }
    SpMat contrib = D[c] * Mc;
    append_block(trips, contrib, N, 0, -1.0);
  }
  for (Index j = 0; j < N; ++j) trips.emplace_back(N + j, 2 * N + 1, 1.0);

  // Border rows: mass constraint over f, mean constraint over psi.
  for (Index j = 0; j < N; ++j) {
    trips.emplace_back(2 * N, N + j, vol);
    trips.emplace_back(2 * N + 1, j, vol);
  }

  // Nonlocal couplings through delta V = W with W = B0(Dpsi) + B1(f) + B2(W):
  // both moments collapse to C = beta/(1 - beta int m) [int V f + int (B0 Dpsi) m].
  if (model.velocity_dependent()) {
    const double beta = model.beta();
    const double denom = 1.0 - beta * ctx.m_integral;
    if (std::abs(denom) < 1e-12)
      throw SolveError("Id - B2 is singular during assembly: denom = " + std::to_string(denom));
    const double coef = beta / denom;

    // Dense functionals: phi_f[i] . f = int V_i f dy, phi_psi[i] . psi = int (B0 Dpsi)_i m dy.
    std::vector<Eigen::VectorXd> phi_f(d), phi_psi(d);
    for (int i = 0; i < d; ++i) {
      phi_f[i] = vol * s.V.component(i).values();
      phi_psi[i] = Eigen::VectorXd::Zero(N);
      for (int e = 0; e < d; ++e) {
        Eigen::VectorXd weight = vol * (s.m.values().array() * b0[i][e].array()).matrix();
        phi_psi[i] += D[e].transpose() * weight;
      }
    }
    std::vector<Eigen::VectorXd> grad_m(d);
    for (int c = 0; c < d; ++c) grad_m[c] = D[c] * s.m.values();

    for (Index j = 0; j < N; ++j) {
      PVec a_hjb = coef * du.at(j);
      PVec a_fp(d);
      for (int c = 0; c < d; ++c) a_fp[c] = -coef * grad_m[c][j];
      for (Index k = 0; k < N; ++k) {
        double hjb_psi = 0.0, hjb_f = 0.0, fp_psi = 0.0, fp_f = 0.0;
        for (int i = 0; i < d; ++i) {
          hjb_psi += a_hjb[i] * phi_psi[i][k];
          hjb_f += a_hjb[i] * phi_f[i][k];
          fp_psi += a_fp[i] * phi_psi[i][k];
          fp_f += a_fp[i] * phi_f[i][k];
        }
        if (hjb_psi != 0.0) trips.emplace_back(j, k, hjb_psi);
        if (hjb_f != 0.0) trips.emplace_back(j, N + k, hjb_f);
        if (fp_psi != 0.0) trips.emplace_back(N + j, k, fp_psi);
        if (fp_f != 0.0) trips.emplace_back(N + j, N + k, fp_f);
      }
    }
  }

  LinearizedSystem sys;
  sys.matrix.resize(2 * N + 2, 2 * N + 2);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  for (int k = 0; k < sys.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.matrix, k); it; ++it)
      if (!std::isfinite(it.value()))
        throw SolveError("non-finite linearization entry at node " +
                         std::to_string(it.row() % N));
  sys.rhs = -assemble_residual(model, s);
  return sys;
}

namespace {

// Block preconditioner for bordered field systems: incomplete LU of each
// elliptic diagonal block, identity on the border tail. Pivot-free ILU on
// the full saddle layout produces worthless factors; the diagonal blocks are
// strongly diagonal and factor cleanly. A small diagonal shift removes the
// constant-function null space of the transport block.
class BlockIlut {
 public:
  void set_blocks(std::vector<Index> sizes) { sizes_ = std::move(sizes); }

  BlockIlut& analyzePattern(const SpMat&) { return *this; }

  BlockIlut& factorize(const SpMat& mat) {
    if (sizes_.empty()) sizes_ = {mat.rows()};
    ilut_.clear();
    offsets_.clear();
    Index off = 0;
    for (Index size : sizes_) {
      SpMat sub = mat.block(off, off, size, size);
      double scale = 0.0;
      for (Index i = 0; i < size; ++i) scale = std::max(scale, std::abs(sub.coeff(i, i)));
      if (scale == 0.0) scale = 1.0;
      SpMat shift(size, size);
      shift.setIdentity();
      sub = SpMat(sub - (1e-4 * scale) * shift);
      auto ilut = std::make_shared<Eigen::IncompleteLUT<double>>();
      ilut->setDroptol(1e-6);
      ilut->setFillfactor(30);
      ilut->compute(sub);
      if (ilut->info() != Eigen::Success) {
        ok_ = false;
        return *this;
      }
      ilut_.push_back(std::move(ilut));
      offsets_.push_back(off);
      off += size;
    }
    tail_ = mat.rows() - off;
    ok_ = true;
    return *this;
  }

  BlockIlut& compute(const SpMat& mat) { return factorize(mat); }

  template <typename Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    Eigen::VectorXd r = b;
    Eigen::VectorXd out(r.size());
    for (size_t k = 0; k < ilut_.size(); ++k) {
      const Index off = offsets_[k];
      const Index size = (k + 1 < offsets_.size() ? offsets_[k + 1] : r.size() - tail_) - off;
      out.segment(off, size) = ilut_[k]->solve(r.segment(off, size));
    }
    if (tail_ > 0) out.tail(tail_) = r.tail(tail_);
    return out;
  }

  Eigen::ComputationInfo info() const { return ok_ ? Eigen::Success : Eigen::NumericalIssue; }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  std::vector<std::shared_ptr<Eigen::IncompleteLUT<double>>> ilut_;
  Index tail_ = 0;
  bool ok_ = false;
};

}  // namespace

Eigen::VectorXd solve_linear(const SpMat& M, const Eigen::VectorXd& rhs, LinearSolverKind kind,
                             int grid_dim, Index pair_count) {
  if (kind == LinearSolverKind::Auto)
    kind = grid_dim <= 2 ? LinearSolverKind::SparseDirect : LinearSolverKind::IterativeRestart;
  if (kind == LinearSolverKind::SparseDirect) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw SolveError("sparse factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw SolveError("sparse solve failed");
    return x;
  }

  Eigen::GMRES<SpMat, BlockIlut> gmres;
  if (pair_count > 0)
    gmres.preconditioner().set_blocks({pair_count, pair_count});
  else if (M.rows() > 1)
    gmres.preconditioner().set_blocks({M.rows() - 1});
  gmres.setMaxIterations(8000);
  gmres.set_restart(100);
  gmres.setTolerance(1e-13);
  gmres.compute(M);
  if (gmres.info() != Eigen::Success) throw SolveError("iterative solver setup failed");

  // GMRES stops on the preconditioned residual; refine against the true one.
  const double bnorm = rhs.norm() + 1e-300;
  Eigen::VectorXd x = gmres.solve(rhs);
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::VectorXd resid = rhs - M * x;
    if (resid.norm() / bnorm <= 1e-11) break;
    x += gmres.solve(resid);
  }
  const double true_res = (M * x - rhs).norm() / bnorm;
  if (!(true_res <= 1e-9))
    throw SolveError("iterative solve inaccurate (relative residual " +
                     std::to_string(true_res) + ")");
  return x;
}

NewtonResult newton_solve(const HamiltonianModel& model, const MFGState& start,
                          const ContinuationConfig& cfg) {
  validate_state(start, /*check_normalization=*/false);

  MFGState state = make_consistent(model, start.u, start.m, start.hbar);
  Eigen::VectorXd r = assemble_residual(model, state);
  double norm = r.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(norm)) throw SolveError("initial residual not finite");
  double best = norm;

  const Index N = state.grid().size();
  int iters = 0;
  while (norm > cfg.newton_tol) {
    if (iters >= cfg.max_newton_iters)
      throw SolveError("newton stalled at residual " + std::to_string(best), best);

    LinearizedSystem sys = assemble_linearization(model, state);
    Eigen::VectorXd delta =
        solve_linear(sys.matrix, sys.rhs, cfg.linear_solver, state.grid().dim(), N);

    // Fraction-to-boundary damping: keep m >= (1 - tau) m elementwise.
    double t = 1.0;
    for (Index j = 0; j < N; ++j) {
      const double dm = delta[N + j];
      if (dm < 0.0) t = std::min(t, cfg.tau * state.m[j] / (-dm));
    }

    bool accepted = false;
    MFGState trial;
    double trial_norm = 0.0;
    for (int bt = 0; bt <= 30; ++bt) {
      ScalarField u2 = state.u;
      ScalarField m2 = state.m;
      u2.values() += t * delta.head(N);
      m2.values() += t * delta.segment(N, N);
      const double hb2 = state.hbar + t * delta[2 * N];
      if (m2.min() > 0.0) {
        try {
          trial = make_consistent(model, std::move(u2), std::move(m2), hb2);
          trial_norm = residual_norm(model, trial);
          if (std::isfinite(trial_norm) && trial_norm <= (1.0 - 1e-4 * t) * norm) {
            accepted = true;
            break;
          }
        } catch (const SolveError&) {
          // velocity fixed point failed at this trial point; shorten the step
        } catch (const DomainError&) {
        }
      }
      t *= 0.5;
    }
    if (!accepted)
      throw SolveError("newton stalled in line search at residual " + std::to_string(norm),
                       std::min(best, norm));

    state = std::move(trial);
    project_normalizations(state);
    state.V = resolve_velocity(model, state.u, state.m);
    r = assemble_residual(model, state);
    norm = r.lpNorm<Eigen::Infinity>();
    best = std::min(best, norm);
    ++iters;
  }
  return {std::move(state), iters, norm};
}

namespace {

TraceEntry make_trace_entry(const HamiltonianModel& blended, const MFGState& s, double lambda,
                            int iters, double res, const ContinuationConfig& cfg) {
  TraceEntry e;
  e.lambda = lambda;
  e.newton_iters = iters;
  e.residual = res;
  if (cfg.record_diagnostics) {
    e.diagnostics = full_report(blended, s, cfg.diagnostics);
    if (e.diagnostics.has("monotonicity_margin")) {
      e.monotonicity_margin = e.diagnostics.get("monotonicity_margin");
      e.monotonicity_negative = e.monotonicity_margin < 0.0;
    }
  }
  return e;
}

}  // namespace

ContinuationResult continuation_run(const HamiltonianModel& model, const TorusGrid& grid,
                                    const ContinuationConfig& cfg) {
  ContinuationResult out;
  out.state = initial_state(model.blend(0.0), grid);

  // The seed may already solve the target problem (for instance when the
  // potential vanishes and the blend is a fixed point); then one accepted
  // step closes the path.
  {
    HamiltonianModel target = model.blend(1.0);
    MFGState seed = make_consistent(target, out.state.u, out.state.m, out.state.hbar);
    const double res = residual_norm(target, seed);
    if (res <= cfg.newton_tol) {
      out.state = std::move(seed);
      out.trace.entries.push_back(make_trace_entry(target, out.state, 1.0, 0, res, cfg));
      out.trace.success = true;
      if (cfg.on_accept) cfg.on_accept(1.0, out.state);
      return out;
    }
  }

  double lambda = 0.0;
  double step = cfg.lambda_step0;
  int halvings = 0;
  while (lambda < 1.0) {
    const double lambda_try = std::min(1.0, lambda + step);
    HamiltonianModel blended = model.blend(lambda_try);
    bool ok = false;
    NewtonResult nr;
    try {
      nr = newton_solve(blended, out.state, cfg);
      ok = true;
    } catch (const SolveError&) {
      ok = false;
    }
    if (ok) {
      out.state = std::move(nr.state);
      lambda = lambda_try;
      halvings = 0;
      out.trace.entries.push_back(
          make_trace_entry(blended, out.state, lambda, nr.iterations, nr.residual, cfg));
      if (cfg.on_accept) cfg.on_accept(lambda, out.state);
      step = std::min(step * cfg.step_growth, cfg.step_cap);
    } else {
      if (++halvings > cfg.max_halvings) {
        out.trace.success = false;
        out.trace.failure = "continuation stuck at lambda=" + std::to_string(lambda) +
                            " (step " + std::to_string(step) + " after " +
                            std::to_string(halvings - 1) + " halvings)";
        return out;
      }
      step *= 0.5;
    }
  }
  out.trace.success = true;
  return out;
}

namespace {

// Frozen-density HJB solve: damped Newton on (u, hbar) with the mean border.
// The Jacobian freezes the velocity chain; for small couplings the extra
// terms only slow convergence, never change the answer.
void picard_hjb_solve(const HamiltonianModel& model, const ScalarField& m, ScalarField& u,
                      double& hbar, LinearSolverKind solver_kind) {
  const TorusGrid& grid = m.grid();
  const Index N = grid.size();
  const double vol = grid.cell_volume();
  SpMat L = laplacian_matrix(grid);
  std::vector<SpMat> D(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) D[a] = centered_diff_matrix(grid, a);

  auto residual = [&](const ScalarField& uu, double hb, VectorField* v_out) {
    VectorField V = resolve_velocity(model, uu, m);
    auto ctx = model.context(m, V);
    VectorField du = gradient(uu);
    ScalarField lap = laplacian(uu);
    Eigen::VectorXd r(N + 1);
    for (Index j = 0; j < N; ++j) r[j] = lap[j] + model.eval(ctx, j, du.at(j)) - hb;
    r[N] = integrate(uu);
    if (v_out) *v_out = std::move(V);
    return r;
  };

  VectorField V(grid);
  Eigen::VectorXd r = residual(u, hbar, &V);
  double norm = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 80 && norm > 1e-12; ++it) {
    auto ctx = model.context(m, V);
    VectorField du = gradient(u);
    std::vector<Trip> trips;
    append_block(trips, L, 0, 0);
    for (Index j = 0; j < N; ++j) trips.emplace_back(j, N, -1.0);
    // drift part: sum_a diag(dpH_a) D_a
    for (int a = 0; a < grid.dim(); ++a) {
      Eigen::VectorXd drift(N);
      for (Index j = 0; j < N; ++j) drift[j] = model.grad_p(ctx, j, du.at(j))[a];
      SpMat scaled = drift.asDiagonal() * D[a];
      append_block(trips, scaled, 0, 0);
    }
    for (Index j = 0; j < N; ++j) trips.emplace_back(N, j, vol);
    SpMat M(N + 1, N + 1);
    M.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd delta = solve_linear(M, Eigen::VectorXd(-r), solver_kind, grid.dim());
    double t = 1.0;
    for (int bt = 0; bt <= 30; ++bt) {
      ScalarField u2 = u;
      u2.values() += t * delta.head(N);
      const double hb2 = hbar + t * delta[N];
      VectorField V2(grid);
      Eigen::VectorXd r2 = residual(u2, hb2, &V2);
      const double n2 = r2.lpNorm<Eigen::Infinity>();
      if (std::isfinite(n2) && n2 <= (1.0 - 1e-4 * t) * norm) {
        u = std::move(u2);
        hbar = hb2;
        V = std::move(V2);
        r = std::move(r2);
        norm = n2;
        break;
      }
      t *= 0.5;
      if (bt == 30) throw SolveError("picard HJB line search failed", norm);
    }
  }
  if (norm > 1e-10) throw SolveError("picard HJB solve stalled", norm);
}

ScalarField picard_fp_solve(const VectorField& V, LinearSolverKind solver_kind) {
  const TorusGrid& grid = V.grid();
  const Index N = grid.size();
  const double vol = grid.cell_volume();
  std::vector<Trip> trips;
  append_block(trips, fp_matrix(V), 0, 0);
  for (Index j = 0; j < N; ++j) {
    trips.emplace_back(j, N, 1.0);
    trips.emplace_back(N, j, vol);
  }
  SpMat M(N + 1, N + 1);
  M.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs[N] = 1.0;
  Eigen::VectorXd sol = solve_linear(M, rhs, solver_kind, grid.dim());
  return ScalarField(grid, sol.head(N));
}

}  // namespace

MFGState picard_oracle(const HamiltonianModel& model, const TorusGrid& grid, double tol) {
  const LinearSolverKind solver_kind = LinearSolverKind::Auto;
  ScalarField m(grid, 1.0);
  ScalarField u(grid, 0.0);
  double hbar = -model.g(1.0);

  for (int sweep = 0; sweep < 10000; ++sweep) {
    picard_hjb_solve(model, m, u, hbar, solver_kind);
    VectorField V = resolve_velocity(model, u, m);
    ScalarField m_new = picard_fp_solve(V, solver_kind);
    if (m_new.min() <= 0.0)
      throw SolveError("picard oracle produced a nonpositive density");
    ScalarField m_next(grid, 0.5 * m.values() + 0.5 * m_new.values());
    m_next.values() /= integrate(m_next).value;
    const double diff = (m_next.values() - m.values()).lpNorm<Eigen::Infinity>();
    m = std::move(m_next);
    if (diff <= tol) {
      picard_hjb_solve(model, m, u, hbar, solver_kind);
      MFGState s;
      s.u = std::move(u);
      s.m = std::move(m);
      s.hbar = hbar;
      s.u.values().array() -= integrate(s.u).value;
      s.V = resolve_velocity(model, s.u, s.m);
      return s;
    }
  }
  throw SolveError("picard oracle did not converge in 10000 sweeps");
}

}  // namespace mfg
