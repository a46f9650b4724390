#include "gridnorm/basis.hpp"

#include <limits>
#include <new>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "gridnorm/parallel.hpp"

namespace gridnorm {

double wendland(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument(
            fmt::format("wendland: argument must be finite and >= 0, got {}", d));
    }
    if (d >= 1.0) return 0.0;
    const double one_minus = 1.0 - d;
    const double p2 = one_minus * one_minus;
    const double p6 = p2 * p2 * p2;
    return p6 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

const char* to_string(VarianceField::Method m) {
    switch (m) {
        case VarianceField::Method::exact: return "exact";
        case VarianceField::Method::kronecker: return "kronecker";
        case VarianceField::Method::fft: return "fft";
    }
    return "?";
}

BasisVector basis_vector(const Point& s, const LevelGeometry& geometry) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
        throw std::invalid_argument(
            fmt::format("basis_vector: location must be finite, got ({}, {})", s.x,
                        s.y));
    }
    BasisVector out;
    out.dim = geometry.count();
    out.location = s;
    const int r = geometry.r_total();
    detail::evaluate_basis(geometry.lattice_x(s.x), geometry.lattice_y(s.y), r,
                           geometry.overlap_multiplier(),
                           [&](int kx, int ky, double v) {
                               out.index.push_back(static_cast<std::int32_t>(
                                   geometry.center_index(kx, ky)));
                               out.value.push_back(v);
                           });
    return out;
}

namespace {

// Shared assembler over any location provider exposing nx(), ny(), x(i), y(j).
template <class Grid>
SparseBasisMatrix assemble(const Grid& grid, const LevelGeometry& geometry) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const std::int64_t n_rows = static_cast<std::int64_t>(nx) * ny;
    const int r = geometry.r_total();
    const std::int64_t n_cols = geometry.count();
    const double overlap = geometry.overlap_multiplier();

    // Lattice coordinates per axis; each row then works on index diffs only.
    std::vector<double> lx(nx), ly(ny);
    for (int i = 0; i < nx; ++i) lx[i] = geometry.lattice_x(grid.x(i));
    for (int j = 0; j < ny; ++j) ly[j] = geometry.lattice_y(grid.y(j));

    SparseBasisMatrix::Storage m;
    try {
        m.resize(n_rows, n_cols);
        std::vector<std::int32_t> counts(n_rows, 0);

        const bool serial = serial_execution();
#pragma omp parallel for schedule(static) if (!serial)
        for (std::int64_t row = 0; row < n_rows; ++row) {
            int c = 0;
            detail::evaluate_basis(lx[row % nx], ly[row / nx], r, overlap,
                                   [&](int, int, double) { ++c; });
            counts[row] = c;
        }

        auto* outer = m.outerIndexPtr();
        outer[0] = 0;
        for (std::int64_t row = 0; row < n_rows; ++row) {
            outer[row + 1] = outer[row] + counts[row];
        }
        const std::int64_t nnz = outer[n_rows];
        if (nnz > std::numeric_limits<std::int32_t>::max()) {
            throw std::length_error(fmt::format(
                "regression_matrix: {} nonzeros exceed 32-bit index storage", nnz));
        }
        m.resizeNonZeros(nnz);

        auto* inner = m.innerIndexPtr();
        auto* vals = m.valuePtr();
#pragma omp parallel for schedule(static) if (!serial)
        for (std::int64_t row = 0; row < n_rows; ++row) {
            std::int64_t pos = outer[row];
            detail::evaluate_basis(lx[row % nx], ly[row / nx], r, overlap,
                                   [&](int kx, int ky, double v) {
                                       inner[pos] = static_cast<std::int32_t>(
                                           geometry.center_index(kx, ky));
                                       vals[pos] = v;
                                       ++pos;
                                   });
        }
    } catch (const std::bad_alloc&) {
        throw std::runtime_error(fmt::format(
            "regression_matrix: memory budget exceeded assembling {} x {} matrix "
            "(~{} nonzeros)",
            n_rows, n_cols,
            n_rows * static_cast<std::int64_t>(
                         (2 * static_cast<int>(overlap) + 1) *
                         (2 * static_cast<int>(overlap) + 1))));
    }
    return SparseBasisMatrix(std::move(m));
}

} // namespace

SparseBasisMatrix regression_matrix(const FineGrid& grid,
                                    const LevelGeometry& geometry) {
    return assemble(grid, geometry);
}

SparseBasisMatrix regression_matrix(const CoarseGrid& grid,
                                    const LevelGeometry& geometry) {
    struct View {
        const CoarseGrid& g;
        int nx() const { return g.n_tilde_x(); }
        int ny() const { return g.n_tilde_y(); }
        double x(int p) const { return g.x(p); }
        double y(int q) const { return g.y(q); }
    };
    return assemble(View{grid}, geometry);
}

void SparseBasisMatrix::scatter_rows(std::int64_t begin, std::int64_t end,
                                     Eigen::Ref<Eigen::MatrixXd> out) const {
    out.setZero();
    for (std::int64_t row = begin; row < end; ++row) {
        for (Storage::InnerIterator it(m_, row); it; ++it) {
            out(it.col(), row - begin) = it.value();
        }
    }
}

SparseBasisMatrix SparseBasisMatrix::select_rows(
    const std::vector<std::int64_t>& rows) const {
    Storage out(static_cast<std::int64_t>(rows.size()), m_.cols());
    const auto* src_outer = m_.outerIndexPtr();
    auto* outer = out.outerIndexPtr();
    outer[0] = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= m_.rows()) {
            throw std::out_of_range(
                fmt::format("select_rows: row {} out of range [0, {})", rows[k],
                            m_.rows()));
        }
        outer[k + 1] = outer[k] + (src_outer[rows[k] + 1] - src_outer[rows[k]]);
    }
    out.resizeNonZeros(outer[rows.size()]);
    auto* inner = out.innerIndexPtr();
    auto* vals = out.valuePtr();
    const auto* src_inner = m_.innerIndexPtr();
    const auto* src_vals = m_.valuePtr();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::int64_t pos = outer[k];
        for (std::int64_t p = src_outer[rows[k]]; p < src_outer[rows[k] + 1]; ++p) {
            inner[pos] = src_inner[p];
            vals[pos] = src_vals[p];
            ++pos;
        }
    }
    return SparseBasisMatrix(std::move(out));
}

SparseBasisMatrix apply_normalization(const SparseBasisMatrix& phi,
                                      const VarianceField& var_field) {
    if (phi.rows() != var_field.count()) {
        throw std::invalid_argument(
            fmt::format("apply_normalization: {} matrix rows vs {} field entries",
                        phi.rows(), var_field.count()));
    }
    const int nx = var_field.nx();
    for (std::int64_t i = 0; i < var_field.count(); ++i) {
        const double var = var_field.values(i / nx, i % nx);
        if (!(var > 0.0)) {
            throw std::runtime_error(fmt::format(
                "apply_normalization: variance {} <= 0 at grid location "
                "(ix={}, iy={}), method {}",
                var, i % nx, i / nx, to_string(var_field.method)));
        }
    }
    SparseBasisMatrix::Storage out = phi.eigen();
    const auto* outer = out.outerIndexPtr();
    auto* vals = out.valuePtr();
    const bool serial = serial_execution();
#pragma omp parallel for schedule(static) if (!serial)
    for (std::int64_t row = 0; row < out.rows(); ++row) {
        const double scale = 1.0 / std::sqrt(var_field.values(row / nx, row % nx));
        for (std::int64_t p = outer[row]; p < outer[row + 1]; ++p) {
            vals[p] *= scale;
        }
    }
    return SparseBasisMatrix(std::move(out));
}

void write_csv_triplets(const SparseBasisMatrix& phi, std::ostream& os) {
    const auto& m = phi.eigen();
    for (std::int64_t row = 0; row < m.rows(); ++row) {
        for (SparseBasisMatrix::Storage::InnerIterator it(m, row); it; ++it) {
            os << row << ',' << it.col() << ',';
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", it.value());
            os << buf << '\n';
        }
    }
}

} // namespace gridnorm
