#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

using Index = std::int64_t;

/// Small vector/matrix in point space (d <= 3); stack-allocated.
using PVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using PMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

/// Uniform periodic lattice on [0,1)^d. Node indexing is row-major (the last
/// axis varies fastest) and wraps modulo n on every axis.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return h_; }
  Index size() const { return size_; }
  double cell_volume() const { return cell_volume_; }  // h^d

  std::array<int, 3> coords(Index node) const;
  Index index(const std::array<int, 3>& c) const;
  /// Periodic neighbor along one axis; offset may be any integer.
  Index shift(Index node, int axis, int offset) const;
  std::array<double, 3> position(Index node) const;

  bool operator==(const TorusGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }

 private:
  int dim_ = 0;
  int n_ = 0;
  double h_ = 0.0;
  Index size_ = 0;
  double cell_volume_ = 0.0;
  std::array<Index, 3> stride_{1, 1, 1};
};

/// Grid-sampled real function. Value-semantic and cheap to copy at desk scale.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(TorusGrid grid, double fill = 0.0);
  ScalarField(TorusGrid grid, Eigen::VectorXd values);

  const TorusGrid& grid() const { return grid_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  bool all_finite() const;
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

 private:
  TorusGrid grid_;
  Eigen::VectorXd values_;
};

/// d scalar components on a shared grid.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(TorusGrid grid, double fill = 0.0);
  VectorField(TorusGrid grid, std::vector<ScalarField> components);

  const TorusGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  const ScalarField& component(int axis) const { return comp_[axis]; }
  ScalarField& component(int axis) { return comp_[axis]; }

  PVec at(Index node) const;
  void set(Index node, const PVec& v);
  double max_norm() const;  // max over nodes of the Euclidean point norm
  bool all_finite() const;

 private:
  TorusGrid grid_;
  std::vector<ScalarField> comp_;
};

/// Result of the trapezoid-on-torus rule h^d * sum(values). The rule is the
/// only quadrature in the library; the value converts implicitly.
struct QuadratureValue {
  static constexpr const char* rule = "trapezoid-on-torus";
  double value = 0.0;
  operator double() const { return value; }
};

QuadratureValue integrate(const ScalarField& f);
QuadratureValue integrate_against(const ScalarField& f, const ScalarField& m);

/// Field dump format "MFGFIELD v1": header line `MFGFIELD v1 <dim> <n> <count>`
/// followed by count decimals, row-major, 17 significant digits.
void write_field(std::ostream& os, const ScalarField& f);
ScalarField read_field(std::istream& is);

}  // namespace mfg
