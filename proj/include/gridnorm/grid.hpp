#pragma once

#include <cstdint>
#include <string>

namespace gridnorm {

/// Rectangular spatial domain in abstract coordinate units.
struct Domain {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }

    /// Throws std::invalid_argument unless x_min < x_max and y_min < y_max
    /// with all bounds finite.
    void validate() const;

    static Domain square(double lo, double hi) { return {lo, hi, lo, hi}; }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Equally spaced evaluation grid spanning the domain, corners included.
/// Stored implicitly (origin, spacing, counts); coordinates are generated
/// on demand so multi-million-point grids stay cheap to pass around.
class FineGrid {
public:
    FineGrid(const Domain& domain, int n) : FineGrid(domain, n, n) {}
    FineGrid(const Domain& domain, int nx, int ny);

    const Domain& domain() const { return domain_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::int64_t count() const { return static_cast<std::int64_t>(nx_) * ny_; }

    double spacing_x() const { return domain_.width() / (nx_ - 1); }
    double spacing_y() const { return domain_.height() / (ny_ - 1); }

    double x(int ix) const;
    double y(int iy) const;
    Point point(int ix, int iy) const { return {x(ix), y(iy)}; }

    /// Linear location index, row-major over y then x.
    std::int64_t index(int ix, int iy) const {
        return static_cast<std::int64_t>(iy) * nx_ + ix;
    }

private:
    Domain domain_;
    int nx_;
    int ny_;
};

/// One resolution level: a square lattice of basis-function centers whose
/// interior spans the domain exactly, extended by n_buffer extra rows of
/// centers on every side at the same spacing.
class LevelGeometry {
public:
    LevelGeometry(const Domain& domain, int r_interior, int n_buffer,
                  double overlap_multiplier);

    const Domain& domain() const { return domain_; }
    int r_interior() const { return r_interior_; }
    int n_buffer() const { return n_buffer_; }
    int r_total() const { return r_interior_ + 2 * n_buffer_; }
    std::int64_t count() const {
        return static_cast<std::int64_t>(r_total()) * r_total();
    }

    /// Center spacing per axis (differs if the domain is not square).
    double spacing_x() const { return domain_.width() / (r_interior_ - 1); }
    double spacing_y() const { return domain_.height() / (r_interior_ - 1); }

    /// Basis support radius in spatial units, per axis.
    double overlap_multiplier() const { return overlap_multiplier_; }
    double gamma_x() const { return overlap_multiplier_ * spacing_x(); }
    double gamma_y() const { return overlap_multiplier_ * spacing_y(); }

    /// Center coordinates; k runs over the buffered lattice [0, r_total).
    double center_x(int kx) const {
        return domain_.x_min + (kx - n_buffer_) * spacing_x();
    }
    double center_y(int ky) const {
        return domain_.y_min + (ky - n_buffer_) * spacing_y();
    }

    /// Lattice coordinate of a spatial location: center k sits at lattice
    /// coordinate k exactly, so distances in these units are center-index
    /// differences.
    double lattice_x(double x) const {
        return (x - domain_.x_min) / spacing_x() + n_buffer_;
    }
    double lattice_y(double y) const {
        return (y - domain_.y_min) / spacing_y() + n_buffer_;
    }

    /// Linear center index, row-major over ky then kx.
    std::int64_t center_index(int kx, int ky) const {
        return static_cast<std::int64_t>(ky) * r_total() + kx;
    }

private:
    Domain domain_;
    int r_interior_;
    int n_buffer_;
    double overlap_multiplier_;
};

LevelGeometry make_level_geometry(const Domain& domain, int r_interior,
                                  int n_buffer,
                                  double overlap_multiplier = 2.5);

enum class CoarseMode { strict, relaxed };

/// How to pick the coarse-grid side length. n_tilde == 0 selects the
/// default rule: 4 * r_total, adjusted in strict mode to the nearest side
/// admitting an integer scale factor.
struct SamplingRule {
    CoarseMode mode = CoarseMode::strict;
    int n_tilde = 0;
};

/// Subsampled evaluation grid used by the spectral upsampling path.
/// In strict mode the coarse points are every M-th fine-grid point, so the
/// two grids share corners bit-exactly. In relaxed mode the coarse grid
/// spans the domain with any admissible side length.
class CoarseGrid {
public:
    CoarseGrid(const FineGrid& fine, int n_tilde_x, int n_tilde_y,
               CoarseMode mode, int m_x, int m_y);

    const FineGrid& fine() const { return fine_; }
    CoarseMode mode() const { return mode_; }
    bool is_strict() const { return mode_ == CoarseMode::strict; }
    int n_tilde_x() const { return ntx_; }
    int n_tilde_y() const { return nty_; }
    /// Strict-mode index stride into the fine grid (0 when relaxed).
    int scale_x() const { return mx_; }
    int scale_y() const { return my_; }
    std::int64_t count() const {
        return static_cast<std::int64_t>(ntx_) * nty_;
    }

    double x(int p) const;
    double y(int q) const;
    Point point(int p, int q) const { return {x(p), y(q)}; }
    std::int64_t index(int p, int q) const {
        return static_cast<std::int64_t>(q) * ntx_ + p;
    }

    /// Fine-grid index of coarse point p (strict mode only).
    int fine_ix(int p) const;
    int fine_iy(int q) const;

private:
    FineGrid fine_;
    int ntx_;
    int nty_;
    CoarseMode mode_;
    int mx_;
    int my_;
};

CoarseGrid make_coarse_grid(const FineGrid& fine, const LevelGeometry& geometry,
                            const SamplingRule& rule = {});

} // namespace gridnorm
