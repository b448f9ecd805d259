#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mfg/grid.hpp"

using namespace mfg;

TEST_CASE("grid indexing is row-major and wraps on every axis") {
  TorusGrid g(2, 8);
  CHECK(g.size() == 64);
  CHECK(g.spacing() == doctest::Approx(0.125));
  // last axis fastest
  CHECK(g.index({0, 1, 0}) == 1);
  CHECK(g.index({1, 0, 0}) == 8);
  auto c = g.coords(13);
  CHECK(c[0] == 1);
  CHECK(c[1] == 5);
  CHECK(g.index(c) == 13);
  CHECK(g.shift(7, 1, 1) == 0);    // wrap forward on the fast axis
  CHECK(g.shift(0, 1, -1) == 7);   // wrap backward
  CHECK(g.shift(56, 0, 1) == 0);   // wrap on the slow axis
  CHECK(g.shift(13, 0, -2) == g.index({7, 5, 0}));
}

TEST_CASE("grid rejects unsupported shapes") {
  CHECK_THROWS_AS(TorusGrid(4, 16), ConfigError);
  CHECK_THROWS_AS(TorusGrid(0, 16), ConfigError);
  CHECK_THROWS_AS(TorusGrid(1, 4), ConfigError);
}

TEST_CASE("quadrature of the constant field is exactly one") {
  for (int d = 1; d <= 3; ++d) {
    TorusGrid g(d, 16);
    ScalarField one(g, 1.0);
    CHECK(std::abs(integrate(one) - 1.0) <= 1e-14);
  }
}

TEST_CASE("trapezoid rule kills periodic harmonics") {
  for (int n : {8, 24, 64}) {
    TorusGrid g(1, n);
    ScalarField f(g);
    for (Index j = 0; j < g.size(); ++j) f[j] = std::sin(2.0 * M_PI * g.position(j)[0]);
    CHECK(std::abs(integrate(f)) <= 1e-14);
  }
}

TEST_CASE("integrate_against respects the density weight") {
  TorusGrid g(1, 32);
  ScalarField two(g, 2.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  ScalarField m(g);
  for (Index j = 0; j < g.size(); ++j) m[j] = unif(rng);
  m.values() /= integrate(m).value;
  CHECK(integrate_against(two, m) == doctest::Approx(2.0).epsilon(1e-13));

  TorusGrid other(1, 16);
  ScalarField wrong(other, 1.0);
  CHECK_THROWS_AS(integrate_against(two, wrong), ConfigError);
}

TEST_CASE("field dump round-trips at full precision") {
  TorusGrid g(2, 8);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  ScalarField f(g);
  for (Index j = 0; j < g.size(); ++j) f[j] = unif(rng);

  std::stringstream ss;
  write_field(ss, f);
  ScalarField back = read_field(ss);
  CHECK(back.grid() == g);
  for (Index j = 0; j < g.size(); ++j) CHECK(back[j] == f[j]);
}

TEST_CASE("field reader rejects malformed dumps") {
  {
    std::stringstream ss("MFGFOO v1 1 8 8\n0 0 0 0 0 0 0 0\n");
    CHECK_THROWS_AS(read_field(ss), ConfigError);
  }
  {
    std::stringstream ss("MFGFIELD v1 1 8 4\n0 0 0 0\n");
    CHECK_THROWS_AS(read_field(ss), ConfigError);  // count mismatch
  }
  {
    std::stringstream ss("MFGFIELD v1 1 8 8\n0 0 0\n");
    CHECK_THROWS_AS(read_field(ss), ConfigError);  // truncated payload
  }
}

TEST_CASE("vector field components must share the grid") {
  TorusGrid g(2, 8);
  TorusGrid other(2, 16);
  std::vector<ScalarField> comps{ScalarField(g), ScalarField(other)};
  CHECK_THROWS_AS(VectorField(g, std::move(comps)), ConfigError);
}

TEST_CASE("spacing times points recovers the unit period") {
  for (int n : {8, 24, 64, 100}) {
    TorusGrid g(1, n);
    CHECK(std::abs(g.spacing() * n - 1.0) <= 1e-15);
  }
}
