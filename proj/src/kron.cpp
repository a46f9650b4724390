#include "gridnorm/kron.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "gridnorm/parallel.hpp"

namespace gridnorm {

Eigen::MatrixXd TridiagonalOperator::dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r_total, r_total);
    const double diag = 2.0 + kappa2 / 2.0;
    for (int i = 0; i < r_total; ++i) {
        a(i, i) = diag;
        if (i > 0) a(i, i - 1) = -1.0;
        if (i < r_total - 1) a(i, i + 1) = -1.0;
    }
    return a;
}

TridiagonalOperator build_tridiagonal(int r_total, double kappa2) {
    if (r_total < 1) {
        throw std::invalid_argument(
            fmt::format("build_tridiagonal: r_total must be >= 1, got {}", r_total));
    }
    if (!(kappa2 > 0.0) || !std::isfinite(kappa2)) {
        throw std::invalid_argument(
            fmt::format("build_tridiagonal: kappa2 must be positive, got {}",
                        kappa2));
    }
    return {r_total, kappa2};
}

KroneckerEig eigendecompose(const TridiagonalOperator& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.dense());
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error(fmt::format(
            "eigendecompose: symmetric eigensolver failed for r_total = {}, "
            "kappa2 = {}",
            a.r_total, a.kappa2));
    }
    KroneckerEig out;
    out.u = solver.eigenvectors();
    out.d = solver.eigenvalues();
    out.kappa2 = a.kappa2;
    // Fix signs: largest-magnitude entry of each eigenvector positive.
    for (int j = 0; j < out.u.cols(); ++j) {
        int imax = 0;
        out.u.col(j).cwiseAbs().maxCoeff(&imax);
        if (out.u(imax, j) < 0.0) out.u.col(j) = -out.u.col(j);
    }
    return out;
}

VarianceField variance_kronecker(const SparseBasisMatrix& phi,
                                 const KroneckerEig& eig, int nx, int ny,
                                 int level) {
    const int r = eig.r_total();
    const std::int64_t dim = static_cast<std::int64_t>(r) * r;
    if (phi.cols() != dim) {
        throw std::invalid_argument(fmt::format(
            "variance_kronecker: phi has {} columns but r_total^2 = {}",
            phi.cols(), dim));
    }
    const std::int64_t n_rows = phi.rows();
    if (n_rows != static_cast<std::int64_t>(nx) * ny) {
        throw std::invalid_argument(fmt::format(
            "variance_kronecker: {} rows vs {} x {} field", n_rows, nx, ny));
    }

    // Reciprocal eigenvalue-sum table, built once per level.
    Eigen::MatrixXd recip(r, r);
    for (int j = 0; j < r; ++j) {
        for (int i = 0; i < r; ++i) {
            recip(i, j) = 1.0 / (eig.d(i) + eig.d(j));
        }
    }

    VarianceField out;
    out.method = VarianceField::Method::kronecker;
    out.level = level;
    out.values.resize(ny, nx);

    const auto& m = phi.eigen();
    const auto* outer = m.outerIndexPtr();
    const auto* inner = m.innerIndexPtr();
    const auto* vals = m.valuePtr();
    const bool serial = serial_execution();
#pragma omp parallel if (!serial)
    {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(r, r);
        Eigen::MatrixXd t(r, r);
        Eigen::MatrixXd w(r, r);
#pragma omp for schedule(static)
        for (std::int64_t row = 0; row < n_rows; ++row) {
            const std::int64_t lo = outer[row];
            const std::int64_t hi = outer[row + 1];
            // center index ky * r + kx maps to P(kx, ky)
            for (std::int64_t q = lo; q < hi; ++q) {
                p(inner[q] % r, inner[q] / r) = vals[q];
            }
            t.noalias() = eig.u.transpose() * p;
            w.noalias() = t * eig.u;
            out.values(row / nx, row % nx) =
                w.cwiseProduct(recip).squaredNorm();
            for (std::int64_t q = lo; q < hi; ++q) {
                p(inner[q] % r, inner[q] / r) = 0.0;
            }
        }
    }
    return out;
}

} // namespace gridnorm
