#pragma once

#include <Eigen/SparseCore>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "gridnorm/grid.hpp"

namespace gridnorm {

/// Compactly supported parent function: (1-d)^6 (35 d^2 + 18 d + 3) / 3 on
/// [0, 1), zero for d >= 1. Value 1 at d = 0, C^4 smooth at the support edge.
/// Throws std::invalid_argument for negative or non-finite arguments.
double wendland(double d);

namespace detail {

/// Evaluate all basis functions with nonzero value at lattice coordinate
/// (lx, ly); emit(kx, ky, value) per entry, ky-major order. Distances are
/// center-index differences, so translating a location by one center spacing
/// reproduces the same floating-point values shifted by one index whenever
/// the lattice coordinates themselves shift exactly.
template <class Emit>
inline void evaluate_basis(double lx, double ly, int r_total, double overlap,
                           Emit&& emit) {
    const double inv_overlap = 1.0 / overlap;
    int ky0 = static_cast<int>(std::ceil(ly - overlap));
    int ky1 = static_cast<int>(std::floor(ly + overlap));
    if (ky0 < 0) ky0 = 0;
    if (ky1 > r_total - 1) ky1 = r_total - 1;
    int kx0 = static_cast<int>(std::ceil(lx - overlap));
    int kx1 = static_cast<int>(std::floor(lx + overlap));
    if (kx0 < 0) kx0 = 0;
    if (kx1 > r_total - 1) kx1 = r_total - 1;
    for (int ky = ky0; ky <= ky1; ++ky) {
        const double dy = ly - ky;
        for (int kx = kx0; kx <= kx1; ++kx) {
            const double dx = lx - kx;
            const double d = std::sqrt(dx * dx + dy * dy) * inv_overlap;
            if (d >= 1.0) continue;
            const double one_minus = 1.0 - d;
            const double p2 = one_minus * one_minus;
            const double p6 = p2 * p2 * p2;
            const double v = p6 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
            if (v > 0.0) emit(kx, ky, v);
        }
    }
}

} // namespace detail

/// Sparse evaluation of every basis function at one location. Entries are
/// strictly positive; indices follow LevelGeometry::center_index ordering.
struct BasisVector {
    std::int64_t dim = 0;
    Point location;
    std::vector<std::int32_t> index;
    std::vector<double> value;

    std::size_t nnz() const { return index.size(); }
};

BasisVector basis_vector(const Point& s, const LevelGeometry& geometry);

/// Marginal process variance evaluated on a grid.
struct VarianceField {
    enum class Method { exact, kronecker, fft };

    Eigen::ArrayXXd values;  // (ny rows, nx cols), row iy = constant y
    Method method = Method::exact;
    int level = 0;

    int nx() const { return static_cast<int>(values.cols()); }
    int ny() const { return static_cast<int>(values.rows()); }
    std::int64_t count() const { return values.size(); }
};

const char* to_string(VarianceField::Method m);

/// Regression matrix: rows index grid locations (row-major over y then x),
/// columns index basis centers. Row i holds basis_vector(s_i) exactly.
class SparseBasisMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int32_t>;

    SparseBasisMatrix() = default;
    explicit SparseBasisMatrix(Storage m) : m_(std::move(m)) {}

    std::int64_t rows() const { return m_.rows(); }
    std::int64_t cols() const { return m_.cols(); }
    std::int64_t nonZeros() const { return m_.nonZeros(); }

    const Storage& eigen() const { return m_; }
    Storage& eigen() { return m_; }

    /// Rows [begin, end) scattered into dense columns of `out`
    /// (out is dim x (end-begin), zero-filled here).
    void scatter_rows(std::int64_t begin, std::int64_t end,
                      Eigen::Ref<Eigen::MatrixXd> out) const;

    /// Keep only the listed rows, in the given order.
    SparseBasisMatrix select_rows(const std::vector<std::int64_t>& rows) const;

private:
    Storage m_;
};

SparseBasisMatrix regression_matrix(const FineGrid& grid,
                                    const LevelGeometry& geometry);
SparseBasisMatrix regression_matrix(const CoarseGrid& grid,
                                    const LevelGeometry& geometry);

/// Rescale row i by 1/sqrt(var_field[i]); sparsity pattern unchanged.
/// Throws std::runtime_error naming the grid location on any entry <= 0.
SparseBasisMatrix apply_normalization(const SparseBasisMatrix& phi,
                                      const VarianceField& var_field);

/// Debug dump as "row,col,value" triplets.
void write_csv_triplets(const SparseBasisMatrix& phi, std::ostream& os);

} // namespace gridnorm
