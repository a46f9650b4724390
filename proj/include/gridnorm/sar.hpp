#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <memory>
#include <mutex>

#include "gridnorm/basis.hpp"
#include "gridnorm/grid.hpp"

namespace gridnorm {

/// Spatial-autoregression matrix on the buffered center lattice:
/// B = L + kappa2 * I with L the five-point stencil Laplacian whose diagonal
/// stays 4 everywhere (missing neighbors at edges are simply dropped). B is
/// symmetric positive definite for kappa2 > 0, and the coefficient precision
/// is Q = B B^T. The constant diagonal makes B equal the Kronecker sum of
/// the tridiagonal one-axis operator exactly, so the eigen-decomposition
/// route and the sparse solve agree to rounding.
class SarSystem {
public:
    SarSystem(int r_total, double kappa2);

    int r_total() const { return r_total_; }
    double kappa2() const { return kappa2_; }
    std::int64_t dim() const {
        return static_cast<std::int64_t>(r_total_) * r_total_;
    }

    const Eigen::SparseMatrix<double>& matrix() const { return b_; }

    /// Sparse Cholesky factor of B, computed on first use. The factor is
    /// read-only afterwards; concurrent solves against it are safe.
    const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>& factorization() const;

private:
    int r_total_;
    double kappa2_;
    Eigen::SparseMatrix<double> b_;
    mutable std::unique_ptr<std::once_flag> factored_ =
        std::make_unique<std::once_flag>();
    mutable std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

SarSystem build_sar(const LevelGeometry& geometry, double kappa2);
SarSystem build_sar(int r_total, double kappa2);

/// Exact marginal variance: per row phi_s of `phi`, solve B v = phi_s and
/// return ||v||^2, shaped (ny, nx). Requires nx * ny == phi.rows().
VarianceField variance_exact(const SparseBasisMatrix& phi, const SarSystem& sys,
                             int nx, int ny, int level = 0);

} // namespace gridnorm
