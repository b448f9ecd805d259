#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "mfg/hamiltonian.hpp"
#include "mfg/operators.hpp"

using namespace mfg;

namespace {

CosineSeries one_mode(int k, double amp) {
  CosineSeries s;
  s.add({k, 0, 0}, amp);
  return s;
}

ScalarField smooth_density(const TorusGrid& g, double amp = 0.3) {
  ScalarField m(g);
  for (Index j = 0; j < g.size(); ++j)
    m[j] = std::exp(amp * std::cos(2.0 * M_PI * g.position(j)[0]));
  m.values() /= integrate(m).value;
  return m;
}

VectorField smooth_vector(const TorusGrid& g, double amp = 1.0) {
  VectorField V(g);
  for (int a = 0; a < g.dim(); ++a)
    for (Index j = 0; j < g.size(); ++j)
      V.component(a)[j] = amp * std::sin(2.0 * M_PI * g.position(j)[a] + 0.3 * a);
  return V;
}

// Finite-difference oracle for the p-derivatives of eval.
void check_p_derivatives(const HamiltonianModel& model, const HamiltonianModel::Context& ctx,
                         Index j, const PVec& p) {
  const int d = p.size();
  const double step = 1e-6 * std::max(1.0, p.norm());
  PVec grad = model.grad_p(ctx, j, p);
  for (int a = 0; a < d; ++a) {
    PVec pp = p, pm = p;
    pp[a] += step;
    pm[a] -= step;
    const double fd = (model.eval(ctx, j, pp) - model.eval(ctx, j, pm)) / (2.0 * step);
    CHECK(grad[a] == doctest::Approx(fd).epsilon(1e-6));
  }
  PMat hess = model.hess_pp(ctx, j, p);
  CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      PVec pp = p, pm = p;
      pp[b] += step;
      pm[b] -= step;
      const double fd = (model.grad_p(ctx, j, pp)[a] - model.grad_p(ctx, j, pm)[a]) / (2.0 * step);
      CHECK(hess(a, b) == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // namespace

TEST_CASE("quadratic_log pointwise values") {
  TorusGrid g(1, 16);
  auto model = HamiltonianModel::quadratic_log();
  ScalarField m(g, 1.0);
  VectorField V(g, 0.0);
  auto ctx = model.context(m, V);
  PVec p0 = PVec::Zero(1);
  CHECK(model.eval(ctx, 0, p0) == 0.0);  // -ln 1
  PVec p = PVec::Constant(1, 0.7);
  CHECK(model.grad_p(ctx, 0, p)[0] == doctest::Approx(0.7));
  CHECK(model.hess_pp(ctx, 0, p)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("quadratic_power g(1) = 1 for every exponent") {
  TorusGrid g(1, 16);
  ScalarField m(g, 1.0);
  for (double gamma : {0.5, 1.0, 2.0}) {
    auto model = HamiltonianModel::quadratic_power(gamma);
    auto ctx = model.context(m);
    CHECK(model.eval(ctx, 3, PVec::Zero(1)) == doctest::Approx(-1.0));
  }
}

TEST_CASE("velocity_coupled family formula") {
  TorusGrid g(1, 16);
  auto model = HamiltonianModel::velocity_coupled(0.1, CouplingKind::Log);
  ScalarField m(g, 1.0);
  VectorField V(g, 2.0);
  auto ctx = model.context(m, V);
  PVec p = PVec::Constant(1, 1.0);
  // |p|^2/2 + alpha p . int(V m) - ln m = 0.5 + 0.1 * 1 * 2 - 0
  CHECK(model.eval(ctx, 5, p) == doctest::Approx(0.7).epsilon(1e-13));
}

TEST_CASE("nonpositive density raises a domain error naming the node") {
  TorusGrid g(1, 16);
  auto model = HamiltonianModel::quadratic_log();
  ScalarField m(g, 1.0);
  m[7] = -0.5;
  VectorField V(g, 0.0);
  auto ctx = model.context(m, V);
  try {
    model.eval(ctx, 7, PVec::Zero(1));
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("node 7") != std::string::npos);
  }
}

TEST_CASE("analytic p-derivatives match finite differences for every family") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  TorusGrid g1(1, 16);
  TorusGrid g2(2, 8);

  std::vector<CosineSeries> drift2(3);
  drift2[0] = one_mode(1, 0.4);
  drift2[1] = one_mode(2, -0.2);

  struct Case {
    HamiltonianModel model;
    TorusGrid grid;
  };
  std::vector<Case> cases;
  cases.push_back({HamiltonianModel::quadratic_log(one_mode(1, 0.3)), g1});
  cases.push_back({HamiltonianModel::quadratic_power(1.7, one_mode(2, 0.2)), g2});
  cases.push_back({HamiltonianModel::velocity_coupled(0.15, CouplingKind::Log, 1.0,
                                                      one_mode(1, 0.1)),
                   g1});
  cases.push_back({HamiltonianModel::special_aniso(one_mode(1, 0.25), drift2, 0.1,
                                                   CouplingKind::Power, 1.5, one_mode(1, 0.2))
                       .blend(0.7),
                   g2});

  for (auto& c : cases) {
    ScalarField m = smooth_density(c.grid);
    VectorField V = smooth_vector(c.grid, 0.5);
    auto ctx = c.model.context(m, V);
    for (int t = 0; t < 25; ++t) {
      Index j = static_cast<Index>(rng() % c.grid.size());
      PVec p(c.grid.dim());
      for (int a = 0; a < c.grid.dim(); ++a) p[a] = unif(rng);
      check_p_derivatives(c.model, ctx, j, p);
    }
  }
}

TEST_CASE("hess_px matches a mixed finite difference for the anisotropic family") {
  TorusGrid g(2, 16);
  std::vector<CosineSeries> drift(3);
  drift[0] = one_mode(1, 0.4);
  auto model =
      HamiltonianModel::special_aniso(one_mode(1, 0.3), drift, 0.0, CouplingKind::Log, 1.0, {});
  ScalarField m = smooth_density(g);
  auto ctx = model.context(m);
  // cross differences need a wider step than first derivatives: the
  // second-order numerator sits at 4 eps^2 and must clear the roundoff floor
  const double eps = 1e-4;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int t = 0; t < 10; ++t) {
    Index j = static_cast<Index>(rng() % g.size());
    PVec p(2);
    p << unif(rng), unif(rng);
    PMat hpx = model.hess_px(ctx, j, p);
    auto x = g.position(j);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) {
        auto xp = x, xm = x;
        xp[i] += eps;
        xm[i] -= eps;
        PVec pp = p, pm = p;
        pp[k] += eps;
        pm[k] -= eps;
        const double fd = (model.h0_at(xp, 2, pp, PVec::Zero(2)) -
                           model.h0_at(xp, 2, pm, PVec::Zero(2)) -
                           model.h0_at(xm, 2, pp, PVec::Zero(2)) +
                           model.h0_at(xm, 2, pm, PVec::Zero(2))) /
                          (4.0 * eps * eps);
        CHECK(hpx(i, k) == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}

TEST_CASE("frechet actions: velocity-independent families see no velocity") {
  TorusGrid g(1, 16);
  auto model = HamiltonianModel::quadratic_log();
  ScalarField m = smooth_density(g);
  VectorField V = smooth_vector(g);
  VectorField W = smooth_vector(g, 2.0);
  ScalarField f(g, 0.7);
  auto ctx = model.context(m, V);
  auto am = model.action_moments(ctx, &f, &W);
  PVec p = PVec::Constant(1, 1.3);
  CHECK(model.a1_action(ctx, 0, p, am) == 0.0);
  CHECK(model.a2_action(ctx, 0, p, am) == 0.0);
  CHECK(model.b1_action(ctx, am).norm() == 0.0);
  CHECK(model.b2_action(ctx, am).norm() == 0.0);
}

TEST_CASE("frechet actions of the velocity coupling") {
  TorusGrid g(1, 16);
  auto model = HamiltonianModel::velocity_coupled(0.1, CouplingKind::Log);
  ScalarField m(g, 1.0);
  VectorField V(g, 1.0);
  ScalarField f(g, 1.0);
  auto ctx = model.context(m, V);
  auto am = model.action_moments(ctx, &f, nullptr);
  PVec p = PVec::Constant(1, 2.0);
  // A1(f) = alpha p . int(V f) = 0.1 * 2 * 1
  CHECK(model.a1_action(ctx, 0, p, am) == doctest::Approx(0.2).epsilon(1e-14));

  ScalarField zero(g, 0.0);
  auto am0 = model.action_moments(ctx, &zero, nullptr);
  CHECK(model.a1_action(ctx, 0, p, am0) == 0.0);
  CHECK(model.b1_action(ctx, am0).norm() == 0.0);
}

TEST_CASE("frechet actions are linear in the field argument") {
  TorusGrid g(1, 32);
  auto model = HamiltonianModel::velocity_coupled(0.2, CouplingKind::Power, 1.3);
  ScalarField m = smooth_density(g);
  VectorField V = smooth_vector(g);
  auto ctx = model.context(m, V);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  PVec p = PVec::Constant(1, 0.8);

  ScalarField f1(g), f2(g);
  VectorField W1(g), W2(g);
  for (Index j = 0; j < g.size(); ++j) {
    f1[j] = unif(rng);
    f2[j] = unif(rng);
    W1.component(0)[j] = unif(rng);
    W2.component(0)[j] = unif(rng);
  }
  const double a = 1.7, b = -0.4;
  ScalarField fc(g, a * f1.values() + b * f2.values());
  VectorField Wc(g);
  Wc.component(0).values() = a * W1.component(0).values() + b * W2.component(0).values();

  auto am1 = model.action_moments(ctx, &f1, &W1);
  auto am2 = model.action_moments(ctx, &f2, &W2);
  auto amc = model.action_moments(ctx, &fc, &Wc);
  CHECK(model.a1_action(ctx, 0, p, amc) ==
        doctest::Approx(a * model.a1_action(ctx, 0, p, am1) + b * model.a1_action(ctx, 0, p, am2))
            .epsilon(1e-12));
  CHECK(model.a2_action(ctx, 0, p, amc) ==
        doctest::Approx(a * model.a2_action(ctx, 0, p, am1) + b * model.a2_action(ctx, 0, p, am2))
            .epsilon(1e-12));
  CHECK((model.b1_action(ctx, amc) - a * model.b1_action(ctx, am1) - b * model.b1_action(ctx, am2))
            .norm() <= 1e-12);
  CHECK((model.b2_action(ctx, amc) - a * model.b2_action(ctx, am1) - b * model.b2_action(ctx, am2))
            .norm() <= 1e-12);
}

TEST_CASE("blend endpoints and affinity") {
  TorusGrid g(1, 32);
  auto base = HamiltonianModel::quadratic_power(2.0, one_mode(1, 0.4));
  ScalarField m = smooth_density(g);
  VectorField V = smooth_vector(g, 0.3);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);

  auto m0 = base.blend(0.0);
  auto m1 = base.blend(1.0);
  auto mh = base.blend(0.37);
  auto c0 = m0.context(m, V);
  auto c1 = m1.context(m, V);
  auto ch = mh.context(m, V);

  for (int t = 0; t < 50; ++t) {
    Index j = static_cast<Index>(rng() % g.size());
    PVec p = PVec::Constant(1, unif(rng));
    const double ref = 0.5 * p.squaredNorm() - m0.g(m[j], j);
    CHECK(m0.eval(c0, j, p) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(m1.eval(c1, j, p) ==
          doctest::Approx(base.eval(c1, j, p)).epsilon(1e-14));
    // affine in lambda
    const double blended = 0.37 * m1.eval(c1, j, p) + 0.63 * m0.eval(c0, j, p);
    CHECK(mh.eval(ch, j, p) == doctest::Approx(blended).epsilon(1e-13));
    // grad_p blends to lambda DpH + (1-lambda) p
    const PVec gref = 0.37 * m1.grad_p(c1, j, p) + 0.63 * p;
    CHECK((mh.grad_p(ch, j, p) - gref).norm() <= 1e-13 * (1.0 + gref.norm()));
  }
}

TEST_CASE("a potential-free base is a fixed point of the blend") {
  TorusGrid g(1, 16);
  auto base = HamiltonianModel::quadratic_log();
  auto half = base.blend(0.5);
  ScalarField m = smooth_density(g);
  auto cb = base.context(m);
  auto cah = half.context(m);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int t = 0; t < 30; ++t) {
    Index j = static_cast<Index>(rng() % g.size());
    PVec p = PVec::Constant(1, unif(rng));
    CHECK(half.eval(cah, j, p) == doctest::Approx(base.eval(cb, j, p)).epsilon(1e-14));
  }
}

TEST_CASE("blend rejects parameters outside the unit interval") {
  auto base = HamiltonianModel::quadratic_log();
  CHECK_THROWS_AS(base.blend(-0.1), ConfigError);
  CHECK_THROWS_AS(base.blend(1.5), ConfigError);
}

TEST_CASE("hess_pp stays uniformly convex for the shipped families") {
  TorusGrid g(1, 16);
  ScalarField m = smooth_density(g);
  std::vector<CosineSeries> drift(3);
  std::vector<HamiltonianModel> models;
  models.push_back(HamiltonianModel::quadratic_log());
  models.push_back(HamiltonianModel::quadratic_power(2.0));
  models.push_back(HamiltonianModel::velocity_coupled(0.1, CouplingKind::Log));
  // a(x) = 1 + 0.5 cos >= 0.5 keeps kappa = 0.5
  models.push_back(
      HamiltonianModel::special_aniso(one_mode(1, 0.5), drift, 0.0, CouplingKind::Log, 1.0, {}));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  for (size_t i = 0; i < models.size(); ++i) {
    const double kappa = (i == 3) ? 0.5 : 1.0;
    auto ctx = models[i].context(m);
    for (int t = 0; t < 40; ++t) {
      Index j = static_cast<Index>(rng() % g.size());
      PVec p = PVec::Constant(1, unif(rng));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{
          Eigen::MatrixXd(models[i].hess_pp(ctx, j, p))};
      CHECK(es.eigenvalues().minCoeff() >= kappa - 1e-10);
    }
  }
}

TEST_CASE("tabulated potentials reproduce the cosine series on the grid") {
  TorusGrid g(1, 32);
  CosineSeries series = one_mode(2, 0.3);
  auto analytic = HamiltonianModel::quadratic_log(series);

  ScalarField table(g);
  for (Index j = 0; j < g.size(); ++j) table[j] = series.eval(g.position(j), 1);
  auto tabulated = HamiltonianModel::quadratic_log();
  tabulated.set_tabulated_potential(table);
  CHECK_FALSE(tabulated.supports_continuous_x());

  ScalarField m = smooth_density(g);
  auto ca = analytic.context(m);
  auto ct = tabulated.context(m);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    Index j = static_cast<Index>(rng() % g.size());
    PVec p = PVec::Constant(1, unif(rng));
    CHECK(tabulated.eval(ct, j, p) == doctest::Approx(analytic.eval(ca, j, p)).epsilon(1e-14));
  }

  // grid mismatch is a structural error
  TorusGrid other(1, 16);
  ScalarField m2(other, 1.0);
  auto c2 = tabulated.context(m2);
  CHECK_THROWS_AS(tabulated.eval(c2, 0, PVec::Zero(1)), ConfigError);
}
