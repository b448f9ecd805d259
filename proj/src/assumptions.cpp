#include "mfg/assumptions.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <ostream>
#include <random>

#include "mfg/errors.hpp"
#include "mfg/operators.hpp"

namespace mfg {

Suite suite_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Suite::A;
  if (s == "D" || s == "d") return Suite::D;
  if (s == "H" || s == "h") return Suite::H;
  if (s == "C" || s == "c") return Suite::C;
  throw ConfigError("unknown suite '" + s + "' (expected A, D, H or C)");
}

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::A: return "A";
    case Suite::D: return "D";
    case Suite::H: return "H";
    case Suite::C: return "C";
  }
  return "?";
}

bool AssumptionReport::all_passed() const {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

const HypothesisResult* AssumptionReport::find(const std::string& id) const {
  for (const auto& r : results)
    if (r.id == id) return &r;
  return nullptr;
}

namespace {

struct Environment {
  ScalarField m;
  VectorField V;
  HamiltonianModel::Context ctx;
  double v2_dm = 0.0;  // int |V|^2 dm
};

ScalarField random_smooth_positive(const TorusGrid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  std::uniform_int_distribution<int> wave(-2, 2);
  ScalarField f(grid, 0.0);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int mode = 0; mode < 3; ++mode) {
    double a = amp(rng), ph = phase(rng);
    std::array<int, 3> k{0, 0, 0};
    for (int ax = 0; ax < grid.dim(); ++ax) k[ax] = wave(rng);
    for (Index j = 0; j < grid.size(); ++j) {
      auto x = grid.position(j);
      double arg = ph;
      for (int ax = 0; ax < grid.dim(); ++ax) arg += k[ax] * x[ax];
      f[j] += a * std::cos(two_pi * arg);
    }
  }
  for (Index j = 0; j < grid.size(); ++j) f[j] = std::exp(f[j]);
  f.values() /= integrate(f).value;
  return f;
}

VectorField random_smooth_vector(const TorusGrid& grid, std::mt19937_64& rng) {
  VectorField V(grid);
  for (int a = 0; a < grid.dim(); ++a) {
    ScalarField c = random_smooth_positive(grid, rng);
    c.values().array() -= 1.0;  // recenters around zero, keeps smoothness
    V.component(a) = std::move(c);
  }
  return V;
}

class Tracker {
 public:
  explicit Tracker(std::string id, std::string statement)
      : id_(std::move(id)), statement_(std::move(statement)) {}

  void observe(double margin, Index node, const PVec& p, int env) {
    if (!seen_ || margin < worst_) {
      worst_ = margin;
      node_ = node;
      p_ = p;
      env_ = env;
      seen_ = true;
    }
  }

  HypothesisResult finish(double tolerance) const {
    HypothesisResult r;
    r.id = id_;
    r.statement = statement_;
    r.worst_margin = seen_ ? worst_ : 0.0;
    r.passed = r.worst_margin >= -tolerance;
    r.witness_node = node_;
    r.witness_p = p_;
    r.witness_env = env_;
    return r;
  }

 private:
  std::string id_, statement_;
  bool seen_ = false;
  double worst_ = 0.0;
  Index node_ = -1;
  PVec p_;
  int env_ = -1;
};

// Central finite differences of H0 in x at a continuous point.
PVec fd_grad_x(const HamiltonianModel& model, std::array<double, 3> x, int dim, const PVec& p,
               const PVec& vm, double step) {
  PVec g(dim);
  for (int i = 0; i < dim; ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (model.h0_at(xp, dim, p, vm) - model.h0_at(xm, dim, p, vm)) / (2.0 * step);
  }
  return g;
}

PMat fd_hess_xx(const HamiltonianModel& model, std::array<double, 3> x, int dim, const PVec& p,
                const PVec& vm, double step) {
  PMat h(dim, dim);
  const double f0 = model.h0_at(x, dim, p, vm);
  for (int i = 0; i < dim; ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    h(i, i) = (model.h0_at(xp, dim, p, vm) - 2.0 * f0 + model.h0_at(xm, dim, p, vm)) /
              (step * step);
    for (int k = i + 1; k < dim; ++k) {
      auto xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += step; xpp[k] += step;
      xpm[i] += step; xpm[k] -= step;
      xmp[i] -= step; xmp[k] += step;
      xmm[i] -= step; xmm[k] -= step;
      double v = (model.h0_at(xpp, dim, p, vm) - model.h0_at(xpm, dim, p, vm) -
                  model.h0_at(xmp, dim, p, vm) + model.h0_at(xmm, dim, p, vm)) /
                 (4.0 * step * step);
      h(i, k) = v;
      h(k, i) = v;
    }
  }
  return h;
}

PMat fd_hess_xp(const HamiltonianModel& model, std::array<double, 3> x, int dim, const PVec& p,
                const PVec& vm, double step_x, double step_p) {
  PMat h(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      auto xp = x, xm = x;
      xp[i] += step_x;
      xm[i] -= step_x;
      PVec pp = p, pm = p;
      pp[k] += step_p;
      pm[k] -= step_p;
      h(i, k) = (model.h0_at(xp, dim, pp, vm) - model.h0_at(xp, dim, pm, vm) -
                 model.h0_at(xm, dim, pp, vm) + model.h0_at(xm, dim, pm, vm)) /
                (4.0 * step_x * step_p);
    }
  return h;
}

double min_eigenvalue(const PMat& M) {
  Eigen::MatrixXd dense(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  return es.eigenvalues().minCoeff();
}

}  // namespace

AssumptionReport check_assumptions(const HamiltonianModel& model, Suite suite,
                                   const SamplerConfig& cfg,
                                   const CandidateConstants& cc) {
  if (!model.supports_continuous_x())
    throw ConfigError("assumption sampling requires an analytic (cosine-series) potential");

  TorusGrid grid(cfg.dim, cfg.n);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_int_distribution<Index> node_draw(0, grid.size() - 1);

  // Contexts hold pointers into the environment fields, so the vector must
  // be fully sized before any context is built.
  std::vector<Environment> envs(cfg.field_samples);
  for (auto& env : envs) {
    env.m = random_smooth_positive(grid, rng);
    env.V = random_smooth_vector(grid, rng);
    ScalarField v2(grid);
    for (Index j = 0; j < grid.size(); ++j) v2[j] = env.V.at(j).squaredNorm();
    env.v2_dm = integrate_against(v2, env.m);
  }
  for (auto& env : envs) env.ctx = model.context(env.m, env.V);
  std::uniform_int_distribution<int> env_draw(0, cfg.field_samples - 1);

  auto draw_p = [&](void) {
    PVec p(grid.dim());
    for (int a = 0; a < grid.dim(); ++a) p[a] = sym(rng);
    if (p.norm() > 0) p *= cfg.p_radius * std::pow(unit(rng), 1.0 / grid.dim()) / p.norm();
    return p;
  };

  AssumptionReport report;
  report.suite = suite;
  report.constants = cc;
  const double fd_x = cfg.fd_step;

  if (suite == Suite::A) {
    Tracker a1("A1", "|H - H0 + g(m)| <= C");
    Tracker a2("A2", "g strictly increasing: g'(m) > 0");
    Tracker a3("A3", "|p|^2 <= C + C H0 + delta int|V|^2 dm");
    Tracker a4("A4", "H + g(m) smooth in (x,p): sampled derivatives finite");
    Tracker a5("A5", "L >= c H0 + g(m) - C - delta int|V|^2 dm");
    Tracker a6("A6", "|DpH|^2 <= C + C H0 + delta int|V|^2 dm");
    Tracker a7("A7", "delta in [0, delta0]");
    Tracker a8("A8", "D2pp H >= kappa I");
    Tracker a9("A9", "|Hxx^| <= C + C H0 + delta int|V|^2 dm");
    Tracker a10("A10", "|Hxp^|^2 <= C + C H0 + delta int|V|^2 dm");
    Tracker a11("A11", "|Hx^| <= C + C |p|^beta");

    a7.observe(std::min(cc.delta, cc.delta0 - cc.delta), -1, PVec(), -1);

    for (int t = 0; t < cfg.samples; ++t) {
      const int e = env_draw(rng);
      const Environment& env = envs[e];
      const Index j = node_draw(rng);
      const PVec p = draw_p();
      auto x = grid.position(j);
      const double mj = env.m[j];

      const double H = model.eval(env.ctx, j, p);
      const double H0 = model.eval_h0(env.ctx, j, p);
      const double gm = model.g(mj, j);
      const double budget = cc.C + cc.C * H0 + cc.delta * env.v2_dm;
      const PVec dp = model.grad_p(env.ctx, j, p);

      a1.observe(cc.C - std::abs(H - H0 + gm), j, p, e);
      a2.observe(model.g_prime(mj, j), j, p, e);
      a3.observe(budget - p.squaredNorm(), j, p, e);
      {
        PVec gx = fd_grad_x(model, x, grid.dim(), p, env.ctx.vm_moment, fd_x);
        const bool finite = gx.allFinite() && dp.allFinite();
        a4.observe(finite ? 0.0 : -std::numeric_limits<double>::infinity(), j, p, e);
      }
      const double L = -H + p.dot(dp);
      a5.observe(L - (cc.c * H0 + gm - cc.C - cc.delta * env.v2_dm), j, p, e);
      a6.observe(budget - dp.squaredNorm(), j, p, e);
      a8.observe(min_eigenvalue(model.hess_pp(env.ctx, j, p)) - cc.kappa, j, p, e);
      {
        const double step_p = fd_x * std::max(1.0, p.norm());
        PMat hxx = fd_hess_xx(model, x, grid.dim(), p, env.ctx.vm_moment, fd_x);
        PMat hxp = fd_hess_xp(model, x, grid.dim(), p, env.ctx.vm_moment, fd_x, step_p);
        PVec hx = fd_grad_x(model, x, grid.dim(), p, env.ctx.vm_moment, fd_x);
        a9.observe(budget - hxx.cwiseAbs().maxCoeff(), j, p, e);
        a10.observe(budget - hxp.squaredNorm(), j, p, e);
        a11.observe(cc.C + cc.C * std::pow(p.norm(), cc.growth_beta) - hx.norm(), j, p, e);
      }
    }
    for (const Tracker* tr : {&a1, &a2, &a3, &a4, &a5, &a6, &a7, &a8, &a9, &a10, &a11})
      report.results.push_back(tr->finish(cfg.tolerance));
    return report;
  }

  if (suite == Suite::D) {
    Tracker d1("D1", "h smooth in (x,p): sampled derivatives finite");
    Tracker d2("D2", "|p|^2 <= C + C |h|");
    Tracker d3("D3", "p.Dph - h >= c h - C");
    Tracker d4("D4", "|Dph|^2 <= C + C h");
    Tracker d5("D5", "D2pp h >= sigma I");
    Tracker d6("D6", "|D2xx h|, |D2xp h|^2 <= C + C h");
    Tracker d7("D7", "h <= C + C |p|^2");
    Tracker d8("D8", "|Dx h| <= C + C |p|^beta");

    const PVec zero_moment = PVec::Zero(grid.dim());
    for (int t = 0; t < cfg.samples; ++t) {
      const Index j = node_draw(rng);
      const PVec p = draw_p();
      auto x = grid.position(j);
      auto lc = model.local_coeffs(x, grid.dim());
      const double h = lc.q * 0.5 * p.squaredNorm() + lc.b.dot(p) + lc.w;
      const PVec dph = lc.q * p + lc.b;

      d2.observe(cc.C + cc.C * std::abs(h) - p.squaredNorm(), j, p, -1);
      d3.observe(p.dot(dph) - h - (cc.c * h - cc.C), j, p, -1);
      d4.observe(cc.C + cc.C * h - dph.squaredNorm(), j, p, -1);
      d5.observe(lc.q - cc.sigma, j, p, -1);
      d7.observe(cc.C + cc.C * p.squaredNorm() - h, j, p, -1);
      {
        const double step_p = fd_x * std::max(1.0, p.norm());
        PMat hxx = fd_hess_xx(model, x, grid.dim(), p, zero_moment, fd_x);
        PMat hxp = fd_hess_xp(model, x, grid.dim(), p, zero_moment, fd_x, step_p);
        PVec hx = fd_grad_x(model, x, grid.dim(), p, zero_moment, fd_x);
        const double bound = cc.C + cc.C * h;
        d6.observe(std::min(bound - hxx.cwiseAbs().maxCoeff(), bound - hxp.squaredNorm()), j, p,
                   -1);
        d8.observe(cc.C + cc.C * std::pow(p.norm(), cc.growth_beta) - hx.norm(), j, p, -1);
        d1.observe(hx.allFinite() && dph.allFinite() ? 0.0
                                                     : -std::numeric_limits<double>::infinity(),
                   j, p, -1);
      }
    }
    for (const Tracker* tr : {&d1, &d2, &d3, &d4, &d5, &d6, &d7, &d8})
      report.results.push_back(tr->finish(cfg.tolerance));
    return report;
  }

  if (suite == Suite::H) {
    Tracker h1a("H1.alpha", "alpha(x) >= alpha0 > 0");
    Tracker h1g("H1.G", "|G(x,0,m,V)|, |DpG|^2, |DxG| <= C + eps int|V|^2 dm");
    Tracker h1f("H1.form", "H = H0 - g(m) with H0 = alpha(x)|p|^2/2 + G");
    Tracker h2g("H2.G", "|D2xp G|^2, |D2xx G|, |D2pp G| <= C + eps int|V|^2 dm");
    Tracker h2k("H2.conv", "D2pp H >= kappa I");

    for (int t = 0; t < cfg.samples; ++t) {
      const int e = env_draw(rng);
      const Environment& env = envs[e];
      const Index j = node_draw(rng);
      const PVec p = draw_p();
      auto x = grid.position(j);
      auto lc = model.local_coeffs(x, grid.dim());
      auto lg = model.local_grads(x, grid.dim());
      const double bound = cc.C + cc.epsilon * env.v2_dm;
      const double beta = model.beta();

      // G = H0 - alpha(x)|p|^2/2 = b.p + w + beta p.(int V m)
      const double g_at0 = lc.w;  // G at p = 0
      PVec dpg = lc.b;
      if (model.velocity_dependent()) dpg += beta * env.ctx.vm_moment;
      PVec dxg = lg.dw;
      for (int i = 0; i < grid.dim(); ++i) dxg[i] += lg.db.row(i).dot(p);

      h1a.observe(lc.q - cc.alpha0, j, p, e);
      h1g.observe(std::min({bound - std::abs(g_at0), bound - dpg.squaredNorm(),
                            bound - dxg.norm()}),
                  j, p, e);
      h1f.observe(cc.C - std::abs(model.eval(env.ctx, j, p) - model.eval_h0(env.ctx, j, p) +
                                  model.g(env.m[j], j)),
                  j, p, e);
      {
        // second derivatives of G = H0 - a(x)|p|^2/2: xp from the drift
        // gradients, xx by finite differences, pp identically zero for the
        // shipped affine-in-p form
        PMat d2xp = lg.db;
        auto g_at = [&](const std::array<double, 3>& xx) {
          return model.h0_at(xx, grid.dim(), p, env.ctx.vm_moment) -
                 model.local_coeffs(xx, grid.dim()).q * 0.5 * p.squaredNorm();
        };
        double d2xx_max = 0.0;
        for (int i = 0; i < grid.dim(); ++i) {
          auto xp = x, xm = x;
          xp[i] += fd_x;
          xm[i] -= fd_x;
          d2xx_max = std::max(
              d2xx_max, std::abs((g_at(xp) - 2.0 * g_at(x) + g_at(xm)) / (fd_x * fd_x)));
        }
        h2g.observe(std::min({bound - d2xp.squaredNorm(), bound - d2xx_max, bound - 0.0}), j, p,
                    e);
        h2k.observe(min_eigenvalue(model.hess_pp(env.ctx, j, p)) - cc.kappa, j, p, e);
      }
    }
    for (const Tracker* tr : {&h1a, &h1g, &h1f, &h2g, &h2k})
      report.results.push_back(tr->finish(cfg.tolerance));
    return report;
  }

  // Suite C: velocity-independent theorem hypotheses.
  if (model.velocity_dependent())
    throw ConfigError("suite C applies to velocity-independent models");
  Tracker c1("C1", "H, D2pp H, D2px H continuous in m (sampled finite differences)");
  Tracker c2("C2", "DmH(f) + g'(m) f and D2pm H(f) smooth in (x,p)");
  Tracker c3("C3", "|DmH(f) + g'(m) f|, |D2pm H(f)| <= C ||f||_L2");
  Tracker c4("C4", "int m Q.Hpp.Q + g'(m) f^2 >= theta int (m|Q|^2 + f^2)");

  for (int t = 0; t < cfg.samples / 10 + 1; ++t) {
    const int e = env_draw(rng);
    const Environment& env = envs[e];
    const Index j = node_draw(rng);
    const PVec p = draw_p();

    ScalarField pert = random_smooth_positive(grid, rng);
    ScalarField m2(grid, env.m.values() + 1e-6 * pert.values());
    auto ctx2 = model.context(m2, env.V);
    const double dH = std::abs(model.eval(ctx2, j, p) - model.eval(env.ctx, j, p));
    c1.observe(std::isfinite(dH) ? 0.0 : -std::numeric_limits<double>::infinity(), j, p, e);

    auto am = model.action_moments(env.ctx, &pert, nullptr);
    const double act = model.a1_action(env.ctx, j, p, am);
    const PVec b1 = model.b1_action(env.ctx, am);
    c2.observe(std::isfinite(act) && b1.allFinite() ? 0.0
                                                    : -std::numeric_limits<double>::infinity(),
               j, p, e);
    ScalarField pert2(grid, pert.values().array().square().matrix());
    const double fl2 = std::sqrt(integrate(pert2).value);
    c3.observe(cc.C * fl2 - std::max(std::abs(act), b1.norm()), j, p, e);
  }
  for (int t = 0; t < cfg.field_samples; ++t) {
    const int e = env_draw(rng);
    const Environment& env = envs[e];
    VectorField Q = random_smooth_vector(grid, rng);
    ScalarField f = random_smooth_positive(grid, rng);
    f.values().array() -= integrate(f).value;
    double form = 0.0, quad = 0.0;
    for (Index j = 0; j < grid.size(); ++j) {
      const PVec qj = Q.at(j);
      const PVec du = PVec::Zero(grid.dim());
      const PMat hpp = model.hess_pp(env.ctx, j, du);
      form += env.m[j] * qj.dot(hpp * qj) + model.g_prime(env.m[j], j) * f[j] * f[j];
      quad += env.m[j] * qj.squaredNorm() + f[j] * f[j];
    }
    c4.observe(grid.cell_volume() * (form - cc.theta * quad), -1, PVec(), e);
  }
  for (const Tracker* tr : {&c1, &c2, &c3, &c4})
    report.results.push_back(tr->finish(cfg.tolerance));
  return report;
}

void print_report(std::ostream& os, const AssumptionReport& report) {
  const auto& cc = report.constants;
  os << "suite " << suite_name(report.suite) << "  (C=" << cc.C << " c=" << cc.c
     << " delta=" << cc.delta << " kappa=" << cc.kappa << " sigma=" << cc.sigma
     << " beta=" << cc.growth_beta << ")\n";
  for (const auto& r : report.results) {
    os << (r.passed ? "  pass  " : "  FAIL  ") << r.id << "  margin=" << r.worst_margin;
    if (!r.passed && r.witness_node >= 0) {
      os << "  witness: node " << r.witness_node;
      if (r.witness_p.size() > 0) {
        os << " p=(";
        for (int i = 0; i < r.witness_p.size(); ++i)
          os << (i ? "," : "") << r.witness_p[i];
        os << ")";
      }
      if (r.witness_env >= 0) os << " env " << r.witness_env;
    }
    os << "  [" << r.statement << "]\n";
  }
}

}  // namespace mfg
