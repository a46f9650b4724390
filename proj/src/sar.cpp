#include "gridnorm/sar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

#include "gridnorm/parallel.hpp"

namespace gridnorm {

SarSystem::SarSystem(int r_total, double kappa2)
    : r_total_(r_total), kappa2_(kappa2) {
    if (r_total < 1) {
        throw std::invalid_argument(
            fmt::format("SarSystem: r_total must be >= 1, got {}", r_total));
    }
    if (!(kappa2 > 0.0) || !std::isfinite(kappa2)) {
        throw std::invalid_argument(fmt::format(
            "SarSystem: kappa2 must be positive (B loses positive definiteness), "
            "got {}",
            kappa2));
    }
    const int r = r_total;
    const std::int64_t n = dim();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    const double diag = 4.0 + kappa2;
    for (int ky = 0; ky < r; ++ky) {
        for (int kx = 0; kx < r; ++kx) {
            const std::int64_t i = static_cast<std::int64_t>(ky) * r + kx;
            trip.emplace_back(i, i, diag);
            if (kx > 0) trip.emplace_back(i, i - 1, -1.0);
            if (kx < r - 1) trip.emplace_back(i, i + 1, -1.0);
            if (ky > 0) trip.emplace_back(i, i - r, -1.0);
            if (ky < r - 1) trip.emplace_back(i, i + r, -1.0);
        }
    }
    b_.resize(n, n);
    b_.setFromTriplets(trip.begin(), trip.end());
    b_.makeCompressed();
}

const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>&
SarSystem::factorization() const {
    std::call_once(*factored_, [this] {
        auto llt =
            std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
        llt->compute(b_);
        if (llt->info() != Eigen::Success) {
            throw std::runtime_error(fmt::format(
                "SarSystem: sparse Cholesky of B failed (kappa2 = {}, r_total = {})",
                kappa2_, r_total_));
        }
        llt_ = std::move(llt);
    });
    return *llt_;
}

SarSystem build_sar(const LevelGeometry& geometry, double kappa2) {
    return SarSystem(geometry.r_total(), kappa2);
}

SarSystem build_sar(int r_total, double kappa2) {
    return SarSystem(r_total, kappa2);
}

VarianceField variance_exact(const SparseBasisMatrix& phi, const SarSystem& sys,
                             int nx, int ny, int level) {
    if (phi.cols() != sys.dim()) {
        throw std::invalid_argument(
            fmt::format("variance_exact: phi has {} columns but B is {} x {}",
                        phi.cols(), sys.dim(), sys.dim()));
    }
    const std::int64_t n_rows = phi.rows();
    if (n_rows != static_cast<std::int64_t>(nx) * ny) {
        throw std::invalid_argument(
            fmt::format("variance_exact: {} rows vs {} x {} field", n_rows, nx, ny));
    }
    const auto& llt = sys.factorization();

    VarianceField out;
    out.method = VarianceField::Method::exact;
    out.level = level;
    out.values.resize(ny, nx);

    constexpr std::int64_t kBatch = 64;
    const std::int64_t n_batches = (n_rows + kBatch - 1) / kBatch;
    const bool serial = serial_execution();
#pragma omp parallel if (!serial)
    {
        Eigen::MatrixXd rhs(sys.dim(), kBatch);
        Eigen::MatrixXd sol;
#pragma omp for schedule(dynamic)
        for (std::int64_t b = 0; b < n_batches; ++b) {
            const std::int64_t begin = b * kBatch;
            const std::int64_t end = std::min(begin + kBatch, n_rows);
            const std::int64_t width = end - begin;
            auto block = rhs.leftCols(width);
            phi.scatter_rows(begin, end, block);
            sol = llt.solve(block);
            for (std::int64_t k = 0; k < width; ++k) {
                const std::int64_t row = begin + k;
                out.values(row / nx, row % nx) = sol.col(k).squaredNorm();
            }
        }
    }
    return out;
}

} // namespace gridnorm
