#include "mfg/hamiltonian.hpp"

#include <cmath>

#include "mfg/operators.hpp"

namespace mfg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::QuadraticLog: return "quadratic_log";
    case Family::QuadraticPower: return "quadratic_power";
    case Family::SpecialAniso: return "special_aniso";
    case Family::VelocityCoupled: return "velocity_coupled";
  }
  return "unknown";
}

double CosineSeries::eval(const std::array<double, 3>& x, int dim) const {
  double acc = 0.0;
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) phase += m.k[a] * x[a];
    acc += m.amplitude * std::cos(kTwoPi * phase);
  }
  return acc;
}

PVec CosineSeries::grad(const std::array<double, 3>& x, int dim) const {
  PVec g = PVec::Zero(dim);
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) phase += m.k[a] * x[a];
    const double s = -m.amplitude * kTwoPi * std::sin(kTwoPi * phase);
    for (int a = 0; a < dim; ++a) g[a] += s * m.k[a];
  }
  return g;
}

PMat CosineSeries::hess(const std::array<double, 3>& x, int dim) const {
  PMat h = PMat::Zero(dim, dim);
  for (const auto& m : modes_) {
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) phase += m.k[a] * x[a];
    const double s = -m.amplitude * kTwoPi * kTwoPi * std::cos(kTwoPi * phase);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) h(a, b) += s * m.k[a] * m.k[b];
  }
  return h;
}

HamiltonianModel HamiltonianModel::quadratic_log(CosineSeries potential) {
  HamiltonianModel m;
  m.family_ = Family::QuadraticLog;
  m.coupling_ = CouplingKind::Log;
  m.potential_ = std::move(potential);
  return m;
}

HamiltonianModel HamiltonianModel::quadratic_power(double gamma, CosineSeries potential) {
  HamiltonianModel m;
  m.family_ = Family::QuadraticPower;
  m.coupling_ = CouplingKind::Power;
  m.gamma_ = gamma;
  m.potential_ = std::move(potential);
  return m;
}

HamiltonianModel HamiltonianModel::velocity_coupled(double alpha, CouplingKind coupling,
                                                    double gamma, CosineSeries potential) {
  HamiltonianModel m;
  m.family_ = Family::VelocityCoupled;
  m.coupling_ = coupling;
  m.gamma_ = gamma;
  m.alpha_ = alpha;
  m.potential_ = std::move(potential);
  return m;
}

HamiltonianModel HamiltonianModel::special_aniso(CosineSeries aniso, std::vector<CosineSeries> drift,
                                                 double alpha, CouplingKind coupling, double gamma,
                                                 CosineSeries potential) {
  HamiltonianModel m;
  m.family_ = Family::SpecialAniso;
  m.coupling_ = coupling;
  m.gamma_ = gamma;
  m.alpha_ = alpha;
  m.aniso_ = std::move(aniso);
  m.drift_ = std::move(drift);
  m.potential_ = std::move(potential);
  return m;
}

HamiltonianModel HamiltonianModel::blend(double lambda) const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("blend parameter must lie in [0,1], got " + std::to_string(lambda));
  HamiltonianModel out = *this;
  out.lambda_ = lambda;
  return out;
}

bool HamiltonianModel::velocity_dependent() const {
  return alpha_ != 0.0 &&
         (family_ == Family::VelocityCoupled || family_ == Family::SpecialAniso);
}

void HamiltonianModel::set_tabulated_potential(ScalarField table) {
  potential_table_ = std::move(table);
}

double HamiltonianModel::g(double m, Index node) const {
  if (m <= 0.0)
    throw DomainError("nonpositive density " + std::to_string(m) + " at node " +
                      std::to_string(node));
  return coupling_ == CouplingKind::Log ? std::log(m) : std::pow(m, gamma_);
}

double HamiltonianModel::g_prime(double m, Index node) const {
  if (m <= 0.0)
    throw DomainError("nonpositive density " + std::to_string(m) + " at node " +
                      std::to_string(node));
  return coupling_ == CouplingKind::Log ? 1.0 / m : gamma_ * std::pow(m, gamma_ - 1.0);
}

HamiltonianModel::Context HamiltonianModel::context(const ScalarField& m) const {
  Context ctx;
  ctx.grid = m.grid();
  ctx.m = &m;
  ctx.vm_moment = PVec::Zero(ctx.grid.dim());
  ctx.m_integral = integrate(m);
  return ctx;
}

HamiltonianModel::Context HamiltonianModel::context(const ScalarField& m,
                                                    const VectorField& V) const {
  if (m.grid() != V.grid()) throw ConfigError("context: density and velocity on different grids");
  Context ctx;
  ctx.grid = m.grid();
  ctx.m = &m;
  ctx.V = &V;
  ctx.vm_moment = PVec::Zero(ctx.grid.dim());
  for (int a = 0; a < ctx.grid.dim(); ++a)
    ctx.vm_moment[a] = integrate_against(V.component(a), m);
  ctx.m_integral = integrate(m);
  return ctx;
}

double HamiltonianModel::potential_value(const Context& ctx, Index node) const {
  if (potential_table_) {
    if (potential_table_->grid() != ctx.grid)
      throw ConfigError("tabulated potential grid does not match evaluation grid");
    return (*potential_table_)[node];
  }
  return potential_.eval(ctx.grid.position(node), ctx.grid.dim());
}

HamiltonianModel::LocalCoeffs HamiltonianModel::local_coeffs(const std::array<double, 3>& x,
                                                             int dim) const {
  LocalCoeffs lc;
  lc.b = PVec::Zero(dim);
  lc.w = lambda_ * potential_.eval(x, dim);
  if (family_ == Family::SpecialAniso) {
    lc.q = lambda_ * (1.0 + aniso_.eval(x, dim)) + (1.0 - lambda_);
    for (int a = 0; a < dim && a < static_cast<int>(drift_.size()); ++a)
      lc.b[a] = lambda_ * drift_[a].eval(x, dim);
  }
  return lc;
}

HamiltonianModel::LocalGrads HamiltonianModel::local_grads(const std::array<double, 3>& x,
                                                           int dim) const {
  LocalGrads lg;
  lg.dq = PVec::Zero(dim);
  lg.db = PMat::Zero(dim, dim);
  lg.dw = lambda_ * potential_.grad(x, dim);
  if (family_ == Family::SpecialAniso) {
    lg.dq = lambda_ * aniso_.grad(x, dim);
    for (int k = 0; k < dim && k < static_cast<int>(drift_.size()); ++k) {
      PVec gb = drift_[k].grad(x, dim);
      for (int i = 0; i < dim; ++i) lg.db(i, k) = lambda_ * gb[i];
    }
  }
  return lg;
}

double HamiltonianModel::eval(const Context& ctx, Index node, const PVec& p) const {
  return eval_h0(ctx, node, p) - g((*ctx.m)[node], node);
}

double HamiltonianModel::eval_h0(const Context& ctx, Index node, const PVec& p) const {
  LocalCoeffs lc = local_coeffs(ctx.grid.position(node), ctx.grid.dim());
  if (potential_table_) lc.w = lambda_ * potential_value(ctx, node);
  double h0 = lc.q * 0.5 * p.squaredNorm() + lc.b.dot(p) + lc.w;
  if (velocity_dependent()) h0 += beta() * p.dot(ctx.vm_moment);
  return h0;
}

PVec HamiltonianModel::grad_p(const Context& ctx, Index node, const PVec& p) const {
  LocalCoeffs lc = local_coeffs(ctx.grid.position(node), ctx.grid.dim());
  PVec g = lc.q * p + lc.b;
  if (velocity_dependent()) g += beta() * ctx.vm_moment;
  return g;
}

PMat HamiltonianModel::hess_pp(const Context& ctx, Index node, const PVec& p) const {
  (void)p;
  const int d = ctx.grid.dim();
  LocalCoeffs lc = local_coeffs(ctx.grid.position(node), d);
  return lc.q * PMat::Identity(d, d);
}

PMat HamiltonianModel::hess_px(const Context& ctx, Index node, const PVec& p) const {
  const int d = ctx.grid.dim();
  LocalGrads lg = local_grads(ctx.grid.position(node), d);
  PMat out(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) out(i, k) = lg.dq[i] * p[k] + lg.db(i, k);
  return out;
}

HamiltonianModel::ActionMoments HamiltonianModel::action_moments(const Context& ctx,
                                                                 const ScalarField* f,
                                                                 const VectorField* W) const {
  const int d = ctx.grid.dim();
  ActionMoments am;
  am.vf_moment = PVec::Zero(d);
  am.wm_moment = PVec::Zero(d);
  if (f && ctx.V)
    for (int a = 0; a < d; ++a) am.vf_moment[a] = integrate_against(ctx.V->component(a), *f);
  if (W)
    for (int a = 0; a < d; ++a) am.wm_moment[a] = integrate_against(W->component(a), *ctx.m);
  return am;
}

double HamiltonianModel::a1_action(const Context& ctx, Index node, const PVec& p,
                                   const ActionMoments& am) const {
  (void)ctx;
  (void)node;
  if (!velocity_dependent()) return 0.0;
  return beta() * p.dot(am.vf_moment);
}

PVec HamiltonianModel::b1_action(const Context& ctx, const ActionMoments& am) const {
  if (!velocity_dependent()) return PVec::Zero(ctx.grid.dim());
  return beta() * am.vf_moment;
}

double HamiltonianModel::a2_action(const Context& ctx, Index node, const PVec& p,
                                   const ActionMoments& am) const {
  (void)ctx;
  (void)node;
  if (!velocity_dependent()) return 0.0;
  return beta() * p.dot(am.wm_moment);
}

PVec HamiltonianModel::b2_action(const Context& ctx, const ActionMoments& am) const {
  if (!velocity_dependent()) return PVec::Zero(ctx.grid.dim());
  return beta() * am.wm_moment;
}

double HamiltonianModel::h0_at(const std::array<double, 3>& x, int dim, const PVec& p,
                               const PVec& vm_moment) const {
  LocalCoeffs lc = local_coeffs(x, dim);
  double h0 = lc.q * 0.5 * p.squaredNorm() + lc.b.dot(p) + lc.w;
  if (velocity_dependent()) h0 += beta() * p.dot(vm_moment);
  return h0;
}

}  // namespace mfg
