#include "mfg/operators.hpp"

#include <vector>

namespace mfg {

namespace {
using Trip = Eigen::Triplet<double>;
}

SpMat centered_diff_matrix(const TorusGrid& grid, int axis) {
  const double w = 1.0 / (2.0 * grid.spacing());
  std::vector<Trip> trips;
  trips.reserve(2 * grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    trips.emplace_back(j, grid.shift(j, axis, +1), +w);
    trips.emplace_back(j, grid.shift(j, axis, -1), -w);
  }
  SpMat D(grid.size(), grid.size());
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

SpMat laplacian_matrix(const TorusGrid& grid) {
  const double w = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<Trip> trips;
  trips.reserve((2 * grid.dim() + 1) * grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    double diag = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      trips.emplace_back(j, grid.shift(j, a, +1), w);
      trips.emplace_back(j, grid.shift(j, a, -1), w);
      diag += 2.0 * w;
    }
    trips.emplace_back(j, j, -diag);
  }
  SpMat L(grid.size(), grid.size());
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

SpMat transport_matrix(const VectorField& V) {
  const TorusGrid& grid = V.grid();
  const double wlap = 1.0 / (grid.spacing() * grid.spacing());
  const double wdif = 1.0 / (2.0 * grid.spacing());
  std::vector<Trip> trips;
  trips.reserve((2 * grid.dim() + 1) * grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    double offdiag_sum = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double drift = V.component(a)[j] * wdif;
      const double up = wlap + drift;
      const double down = wlap - drift;
      trips.emplace_back(j, grid.shift(j, a, +1), up);
      trips.emplace_back(j, grid.shift(j, a, -1), down);
      offdiag_sum += up;
      offdiag_sum += down;
    }
    trips.emplace_back(j, j, -offdiag_sum);
  }
  SpMat A(grid.size(), grid.size());
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SpMat fp_matrix(const VectorField& V) { return SpMat(transport_matrix(V).transpose()); }

ScalarField apply(const SpMat& op, const ScalarField& f) {
  return ScalarField(f.grid(), op * f.values());
}

PVec gradient_at(const ScalarField& f, Index node) {
  const TorusGrid& grid = f.grid();
  const double w = 1.0 / (2.0 * grid.spacing());
  PVec g(grid.dim());
  for (int a = 0; a < grid.dim(); ++a)
    g[a] = (f[grid.shift(node, a, +1)] - f[grid.shift(node, a, -1)]) * w;
  return g;
}

VectorField gradient(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  VectorField g(grid);
  const double w = 1.0 / (2.0 * grid.spacing());
  for (int a = 0; a < grid.dim(); ++a) {
    ScalarField& c = g.component(a);
    for (Index j = 0; j < grid.size(); ++j)
      c[j] = (f[grid.shift(j, a, +1)] - f[grid.shift(j, a, -1)]) * w;
  }
  return g;
}

ScalarField laplacian(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  const double w = 1.0 / (grid.spacing() * grid.spacing());
  ScalarField out(grid);
  for (Index j = 0; j < grid.size(); ++j) {
    double acc = 0.0;
    for (int a = 0; a < grid.dim(); ++a)
      acc += f[grid.shift(j, a, +1)] - 2.0 * f[j] + f[grid.shift(j, a, -1)];
    out[j] = acc * w;
  }
  return out;
}

PMat hessian_at(const ScalarField& f, Index node) {
  const TorusGrid& grid = f.grid();
  const double h = grid.spacing();
  const double w2 = 1.0 / (h * h);
  const double wx = 1.0 / (4.0 * h * h);
  const int d = grid.dim();
  PMat H(d, d);
  for (int a = 0; a < d; ++a) {
    H(a, a) = (f[grid.shift(node, a, +1)] - 2.0 * f[node] + f[grid.shift(node, a, -1)]) * w2;
    for (int b = a + 1; b < d; ++b) {
      Index pp = grid.shift(grid.shift(node, a, +1), b, +1);
      Index pm = grid.shift(grid.shift(node, a, +1), b, -1);
      Index mp = grid.shift(grid.shift(node, a, -1), b, +1);
      Index mm = grid.shift(grid.shift(node, a, -1), b, -1);
      double v = (f[pp] - f[pm] - f[mp] + f[mm]) * wx;
      H(a, b) = v;
      H(b, a) = v;
    }
  }
  return H;
}

}  // namespace mfg
