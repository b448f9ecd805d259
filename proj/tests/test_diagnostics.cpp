#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mfg/diagnostics.hpp"
#include "mfg/operators.hpp"
#include "mfg/solver.hpp"

using namespace mfg;

namespace {

CosineSeries one_mode(int k, double amp) {
  CosineSeries s;
  s.add({k, 0, 0}, amp);
  return s;
}

MFGState benchmark_state(const HamiltonianModel& model, const TorusGrid& g) {
  ContinuationConfig cfg;
  cfg.record_diagnostics = false;
  ContinuationResult res = continuation_run(model, g, cfg);
  REQUIRE(res.trace.success);
  return res.state;
}

}  // namespace

TEST_CASE("energy identity gap at the seed and under an hbar shift") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log().blend(0.0);
  MFGState seed = initial_state(model, g);
  CHECK(energy_identity_gap(model, seed) == 0.0);

  MFGState shifted = seed;
  shifted.hbar += 0.5;
  CHECK(energy_identity_gap(model, shifted) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("energy identity holds at a converged benchmark state") {
  TorusGrid g(1, 64);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, g);
  CHECK(std::abs(energy_identity_gap(model.blend(1.0), s)) <= 1e-9);
}

TEST_CASE("multiplier gaps vanish for a uniform density") {
  TorusGrid g(1, 32);
  VectorField V(g);
  for (Index j = 0; j < g.size(); ++j)
    V.component(0)[j] = 0.4 * std::sin(2.0 * M_PI * g.position(j)[0]);
  ScalarField m(g, 1.0);
  auto gaps = multiplier_identity_gaps(m, V, {0.5, 1.0, 2.0});
  for (const auto& [key, gap] : gaps) {
    INFO(key);
    CHECK(std::abs(gap) <= 1e-13);
  }
}

TEST_CASE("multiplier gaps at a converged state sit at residual scale") {
  TorusGrid g(1, 64);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, g);
  auto gaps = multiplier_identity_gaps(s.m, s.V, {1.0, 2.0});
  for (const auto& [key, gap] : gaps) {
    INFO(key);
    CHECK(std::abs(gap) <= 1e-9);
  }
}

TEST_CASE("multiplier gap on a non-solution state equals the direct pairing") {
  TorusGrid g(1, 64);
  ScalarField m(g);
  for (Index j = 0; j < g.size(); ++j)
    m[j] = 1.0 + 0.2 * std::cos(2.0 * M_PI * g.position(j)[0]);
  m.values() /= integrate(m).value;
  VectorField V(g, 0.3);

  auto gaps = multiplier_identity_gaps(m, V, {});
  double lnm_gap = 0.0;
  for (const auto& [key, gap] : gaps)
    if (key == "ln_m") lnm_gap = gap;

  // direct evaluation of <m, Delta ln m + V . D ln m> with the same stencils
  ScalarField lnm(g, m.values().array().log().matrix());
  ScalarField lap = laplacian(lnm);
  VectorField dlnm = gradient(lnm);
  double acc = 0.0;
  for (Index j = 0; j < g.size(); ++j)
    acc += m[j] * (lap[j] + V.at(j).dot(dlnm.at(j)));
  acc *= g.cell_volume();
  CHECK(lnm_gap == doctest::Approx(acc).epsilon(1e-12));
  CHECK(std::abs(lnm_gap) > 1e-6);  // genuinely nonzero away from solutions
}

TEST_CASE("norm panel values at the seed") {
  TorusGrid g(2, 16);
  auto model = HamiltonianModel::quadratic_log().blend(0.0);
  MFGState seed = initial_state(model, g);
  DiagnosticsReport r = norm_panel(model, seed);
  CHECK(r.get("sqrt_m_H1") == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.get("ln_m_H1") == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(r.get("int_V2_dm") == 0.0);
  CHECK(r.get("osc_u") == 0.0);
  CHECK(r.get("min_m") == 1.0);
  CHECK(r.get("inv_m_Linf") == 1.0);
}

TEST_CASE("centered log-density H1 norm matches the closed form") {
  TorusGrid g(1, 256);
  auto model = HamiltonianModel::quadratic_log();
  MFGState s = initial_state(model, g);
  for (Index j = 0; j < g.size(); ++j)
    s.m[j] = std::exp(std::cos(2.0 * M_PI * g.position(j)[0]));
  s.m.values() /= integrate(s.m).value;
  s.V = resolve_velocity(model, s.u, s.m);
  DiagnosticsReport r = norm_panel(model, s);
  const double h1sq = r.get("ln_m_H1") * r.get("ln_m_H1");
  CHECK(h1sq == doctest::Approx(0.5 + 2.0 * M_PI * M_PI).epsilon(1e-3));
}

TEST_CASE("oscillation obeys the torus diameter bound on smooth fields") {
  TorusGrid g(2, 32);
  auto model = HamiltonianModel::quadratic_log();
  MFGState s = initial_state(model, g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const double a = unif(rng), b = unif(rng), c = unif(rng);
    for (Index j = 0; j < g.size(); ++j) {
      auto x = g.position(j);
      s.u[j] = a * std::sin(2.0 * M_PI * x[0]) + b * std::cos(2.0 * M_PI * x[1]) +
               c * std::sin(2.0 * M_PI * (x[0] + x[1]));
    }
    DiagnosticsReport r = norm_panel(model, s);
    CHECK(r.get("osc_u") <= r.get("lip_u") * g.dim() * 0.5 * (1.0 + 1e-12));
  }
}

TEST_CASE("panel is invariant under constant shifts of u") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, TorusGrid(1, 32));
  DiagnosticsReport base = norm_panel(model.blend(1.0), s);
  MFGState shifted = s;
  shifted.u.values().array() += 3.7;
  DiagnosticsReport moved = norm_panel(model.blend(1.0), shifted);
  for (const auto& [key, value] : base.entries()) {
    INFO(key);
    CHECK(moved.get(key) == doctest::Approx(value).epsilon(1e-11));
  }
}

TEST_CASE("monotonicity form at lambda=0 equals the closed form") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1)).blend(0.0);
  MFGState s = initial_state(model, g);
  // a non-trivial positive density keeps g'(m) interesting
  for (Index j = 0; j < g.size(); ++j)
    s.m[j] = 1.0 + 0.3 * std::cos(2.0 * M_PI * g.position(j)[0]);
  s.m.values() /= integrate(s.m).value;
  s.V = resolve_velocity(model, s.u, s.m);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    VectorField Q(g), W(g);
    ScalarField f(g);
    for (Index j = 0; j < g.size(); ++j) {
      Q.component(0)[j] = unif(rng);
      W.component(0)[j] = unif(rng);
      f[j] = unif(rng);
    }
    f.values().array() -= integrate(f).value;
    MonotonicityResult res = monotonicity_form(model, s, Q, f, W);
    double closed = 0.0;
    for (Index j = 0; j < g.size(); ++j)
      closed += s.m[j] * Q.component(0)[j] * Q.component(0)[j] +
                (1.0 / s.m[j]) * f[j] * f[j];
    closed *= g.cell_volume();
    CHECK(res.form_value == doctest::Approx(closed).epsilon(1e-12));
  }
}

TEST_CASE("monotonicity form vanishes on pure-W directions for local families") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log();
  MFGState s = initial_state(model, g);
  VectorField Q(g, 0.0), W(g, 1.3);
  ScalarField f(g, 0.0);
  MonotonicityResult res = monotonicity_form(model, s, Q, f, W);
  CHECK(res.form_value == 0.0);
  CHECK(res.defect_m_norm2 == doctest::Approx(1.3 * 1.3).epsilon(1e-13));
}

TEST_CASE("zero-mean warning fires when int f != 0") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log();
  MFGState s = initial_state(model, g);
  VectorField Q(g, 0.0), W(g, 0.0);
  ScalarField f(g, 1.0);
  CHECK(monotonicity_form(model, s, Q, f, W).f_mean_warning);
  ScalarField f0(g, 0.0);
  CHECK_FALSE(monotonicity_form(model, s, Q, f0, W).f_mean_warning);
}

TEST_CASE("csv rows are headered, ordered, and 17-digit stable") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, g);
  DiagnosticsOptions opts;
  opts.monotonicity_samples = 5;
  DiagnosticsReport r = full_report(model.blend(1.0), s, opts);

  std::ostringstream os1, os2;
  write_csv_header(os1, r);
  write_csv_row(os1, r);
  write_csv_header(os2, r);
  write_csv_row(os2, r);
  CHECK(os1.str() == os2.str());
  CHECK(os1.str().find("hbar,energy_gap") == 0);
  CHECK(os1.str().find("monotonicity_margin") != std::string::npos);

  // round-trip: 17 significant digits reproduce the double exactly
  const double v = r.get("hbar");
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("multiplier gaps are bounded by the FP residual pairing") {
  // At a state with FP-residual infinity-norm eps, each gap for phi obeys
  // |gap| <= eps ||phi||_1 (1 + ||V||_inf); checked on non-solution states.
  TorusGrid g(1, 64);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(-0.2, 0.2);
  for (int t = 0; t < 5; ++t) {
    ScalarField m(g), u(g);
    for (Index j = 0; j < g.size(); ++j) {
      m[j] = 1.0 + unif(rng);
      u[j] = 0.3 * unif(rng);
    }
    m.values() /= integrate(m).value;
    u.values().array() -= integrate(u).value;
    MFGState s = make_consistent(model, u, m, 0.0);
    Eigen::VectorXd r = assemble_residual(model, s);
    const double eps = r.segment(g.size(), g.size()).lpNorm<Eigen::Infinity>();

    auto gaps = multiplier_identity_gaps(s.m, s.V, {0.5, 1.0, 2.0}, {2.0});
    for (const auto& [key, gap] : gaps) {
      ScalarField phi(g);
      if (key == "ln_m") phi.values() = s.m.values().array().log().matrix();
      else if (key == "inv_m") phi.values() = s.m.values().array().inverse().matrix();
      else if (key == "abs_ln_m^2")
        phi.values() = s.m.values().array().log().abs().pow(2.0).matrix();
      else if (key == "m^0.5") phi.values() = s.m.values().array().pow(0.5).matrix();
      else if (key == "m^1") phi.values() = s.m.values();
      else if (key == "m^2") phi.values() = s.m.values().array().square().matrix();
      else FAIL("unexpected key ", key);
      const double phi_l1 = g.cell_volume() * phi.values().cwiseAbs().sum();
      INFO(key);
      CHECK(std::abs(gap) <= eps * phi_l1 * (1.0 + s.V.max_norm()) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("log-power multiplier variants vanish at converged states") {
  TorusGrid g(1, 64);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, g);
  auto gaps = multiplier_identity_gaps(s.m, s.V, {}, {1.0, 2.0});
  for (const auto& [key, gap] : gaps) {
    INFO(key);
    CHECK(std::abs(gap) <= 1e-9);
  }
}

TEST_CASE("the lagrangian route reproduces the effective Hamiltonian") {
  // Hbar = int (H - V.Du) dm = -int L dm with L = -H + p.DpH evaluated along
  // the optimal feedback; both routes must land within residual scale.
  TorusGrid g(1, 64);
  auto model = HamiltonianModel::quadratic_log(one_mode(1, 0.1));
  MFGState s = benchmark_state(model, g);
  auto blended = model.blend(1.0);
  auto ctx = blended.context(s.m, s.V);
  VectorField du = gradient(s.u);
  ScalarField lagrangian(g);
  for (Index j = 0; j < g.size(); ++j) {
    PVec p = du.at(j);
    lagrangian[j] = -blended.eval(ctx, j, p) + p.dot(blended.grad_p(ctx, j, p));
  }
  CHECK(std::abs(s.hbar + integrate_against(lagrangian, s.m)) <= 1e-9);
}
