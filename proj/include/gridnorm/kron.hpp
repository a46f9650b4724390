#pragma once

#include <Eigen/Dense>

#include "gridnorm/basis.hpp"

namespace gridnorm {

/// One-axis operator of the Kronecker-sum split B = A (+) A: symmetric
/// tridiagonal with constant diagonal 2 + kappa2/2 and off-diagonals -1.
struct TridiagonalOperator {
    int r_total = 0;
    double kappa2 = 0.0;

    Eigen::MatrixXd dense() const;
};

TridiagonalOperator build_tridiagonal(int r_total, double kappa2);

/// Eigen-decomposition A = U diag(d) U^T with d ascending and a fixed sign
/// convention (largest-magnitude entry of each eigenvector positive).
struct KroneckerEig {
    Eigen::MatrixXd u;
    Eigen::VectorXd d;
    double kappa2 = 0.0;

    int r_total() const { return static_cast<int>(d.size()); }
};

KroneckerEig eigendecompose(const TridiagonalOperator& a);

/// Exact marginal variance through the eigen route: per location reshape
/// phi_s into the r x r matrix P, form W = U^T P U with two dense products,
/// and accumulate sum over (i, j) of (W_ij / (d_i + d_j))^2.
VarianceField variance_kronecker(const SparseBasisMatrix& phi,
                                 const KroneckerEig& eig, int nx, int ny,
                                 int level = 0);

} // namespace gridnorm
