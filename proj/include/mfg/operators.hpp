#pragma once

#include <Eigen/SparseCore>

#include "mfg/grid.hpp"

namespace mfg {

using SpMat = Eigen::SparseMatrix<double>;

/// Centered first difference along one axis, periodic wrap: entries +-1/(2h).
/// Antisymmetric: D^T = -D.
SpMat centered_diff_matrix(const TorusGrid& grid, int axis);

/// Standard (2d+1)-point second-order Laplacian with periodic wrap.
SpMat laplacian_matrix(const TorusGrid& grid);

/// Transport linearization A = Laplacian + sum_i diag(V_i) D_i, i.e.
/// phi -> Delta phi + V . D phi. Each diagonal entry is assembled as the
/// negative sum of its row's off-diagonal entries, so A annihilates constants.
SpMat transport_matrix(const VectorField& V);

/// Fokker-Planck operator m -> Delta m - div(V m), defined as the exact
/// transpose of transport_matrix(V); node sums of its output vanish.
SpMat fp_matrix(const VectorField& V);

ScalarField apply(const SpMat& op, const ScalarField& f);

/// Centered gradient, component i at node j = (f[j+e_i] - f[j-e_i]) / (2h).
VectorField gradient(const ScalarField& f);
PVec gradient_at(const ScalarField& f, Index node);

ScalarField laplacian(const ScalarField& f);

/// Full second-difference Hessian at a node: diagonal entries from the
/// three-point stencil, mixed entries from the four-point cross stencil.
PMat hessian_at(const ScalarField& f, Index node);

}  // namespace mfg
