#include "mfg/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace mfg {

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > 3) throw ConfigError("grid dim must be 1, 2 or 3, got " + std::to_string(dim));
  if (n < 8) throw ConfigError("grid n must be at least 8, got " + std::to_string(n));
  h_ = 1.0 / n;
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= n_;
  cell_volume_ = 1.0;
  for (int a = 0; a < dim_; ++a) cell_volume_ *= h_;
  // row-major: last axis fastest
  for (int a = dim_ - 1; a >= 0; --a) stride_[a] = (a == dim_ - 1) ? 1 : stride_[a + 1] * n_;
}

std::array<int, 3> TorusGrid::coords(Index node) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) c[a] = static_cast<int>((node / stride_[a]) % n_);
  return c;
}

Index TorusGrid::index(const std::array<int, 3>& c) const {
  Index node = 0;
  for (int a = 0; a < dim_; ++a) {
    int w = ((c[a] % n_) + n_) % n_;
    node += static_cast<Index>(w) * stride_[a];
  }
  return node;
}

Index TorusGrid::shift(Index node, int axis, int offset) const {
  int c = static_cast<int>((node / stride_[axis]) % n_);
  int w = ((c + offset) % n_ + n_) % n_;
  return node + static_cast<Index>(w - c) * stride_[axis];
}

std::array<double, 3> TorusGrid::position(Index node) const {
  auto c = coords(node);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = c[a] * h_;
  return x;
}

ScalarField::ScalarField(TorusGrid grid, double fill)
    : grid_(grid), values_(Eigen::VectorXd::Constant(grid.size(), fill)) {}

ScalarField::ScalarField(TorusGrid grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ConfigError("field length " + std::to_string(values_.size()) +
                      " does not match grid node count " + std::to_string(grid_.size()));
}

bool ScalarField::all_finite() const { return values_.allFinite(); }

VectorField::VectorField(TorusGrid grid, double fill) : grid_(grid) {
  comp_.reserve(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) comp_.emplace_back(grid, fill);
}

VectorField::VectorField(TorusGrid grid, std::vector<ScalarField> components)
    : grid_(grid), comp_(std::move(components)) {
  if (static_cast<int>(comp_.size()) != grid_.dim())
    throw ConfigError("vector field needs one component per axis");
  for (const auto& c : comp_)
    if (c.grid() != grid_) throw ConfigError("vector field components on mismatched grids");
}

PVec VectorField::at(Index node) const {
  PVec v(dim());
  for (int a = 0; a < dim(); ++a) v[a] = comp_[a][node];
  return v;
}

void VectorField::set(Index node, const PVec& v) {
  for (int a = 0; a < dim(); ++a) comp_[a][node] = v[a];
}

double VectorField::max_norm() const {
  double best = 0.0;
  for (Index j = 0; j < grid_.size(); ++j) best = std::max(best, at(j).norm());
  return best;
}

bool VectorField::all_finite() const {
  for (const auto& c : comp_)
    if (!c.all_finite()) return false;
  return true;
}

QuadratureValue integrate(const ScalarField& f) {
  return {f.grid().cell_volume() * f.values().sum()};
}

QuadratureValue integrate_against(const ScalarField& f, const ScalarField& m) {
  if (f.grid() != m.grid()) throw ConfigError("integrate_against: fields on different grids");
  return {f.grid().cell_volume() * f.values().dot(m.values())};
}

void write_field(std::ostream& os, const ScalarField& f) {
  os << "MFGFIELD v1 " << f.grid().dim() << ' ' << f.grid().n() << ' ' << f.size() << '\n';
  char buf[40];
  for (Index i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", f[i]);
    os << buf << ((i + 1) % 8 == 0 ? '\n' : ' ');
  }
  if (f.size() % 8 != 0) os << '\n';
}

ScalarField read_field(std::istream& is) {
  std::string magic, version;
  int dim = 0, n = 0;
  Index count = 0;
  if (!(is >> magic >> version >> dim >> n >> count) || magic != "MFGFIELD" || version != "v1")
    throw ConfigError("bad MFGFIELD header");
  TorusGrid grid(dim, n);
  if (count != grid.size())
    throw ConfigError("MFGFIELD count " + std::to_string(count) + " does not match " +
                      std::to_string(grid.size()) + " grid nodes");
  Eigen::VectorXd values(count);
  for (Index i = 0; i < count; ++i)
    if (!(is >> values[i])) throw ConfigError("MFGFIELD truncated at value " + std::to_string(i));
  ScalarField f(grid, std::move(values));
  if (!f.all_finite()) throw ConfigError("MFGFIELD contains non-finite values");
  return f;
}

}  // namespace mfg
