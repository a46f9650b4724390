#include "gridnorm/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace gridnorm {

void Domain::validate() const {
    if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
          std::isfinite(y_max))) {
        throw std::invalid_argument("Domain: bounds must be finite");
    }
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw std::invalid_argument(
            fmt::format("Domain: need x_min < x_max and y_min < y_max, got "
                        "[{}, {}] x [{}, {}]",
                        x_min, x_max, y_min, y_max));
    }
}

FineGrid::FineGrid(const Domain& domain, int nx, int ny)
    : domain_(domain), nx_(nx), ny_(ny) {
    domain_.validate();
    if (nx < 2 || ny < 2) {
        throw std::invalid_argument(
            fmt::format("FineGrid: side lengths must be >= 2, got {} x {}", nx, ny));
    }
}

double FineGrid::x(int ix) const { return domain_.x_min + ix * spacing_x(); }

double FineGrid::y(int iy) const { return domain_.y_min + iy * spacing_y(); }

LevelGeometry::LevelGeometry(const Domain& domain, int r_interior, int n_buffer,
                             double overlap_multiplier)
    : domain_(domain),
      r_interior_(r_interior),
      n_buffer_(n_buffer),
      overlap_multiplier_(overlap_multiplier) {
    domain_.validate();
    if (r_interior < 2) {
        throw std::invalid_argument(fmt::format(
            "LevelGeometry: r_interior must be >= 2 (spacing undefined), got {}",
            r_interior));
    }
    if (n_buffer < 0) {
        throw std::invalid_argument(
            fmt::format("LevelGeometry: n_buffer must be >= 0, got {}", n_buffer));
    }
    if (!(overlap_multiplier > 0.0) || !std::isfinite(overlap_multiplier)) {
        throw std::invalid_argument(
            fmt::format("LevelGeometry: overlap_multiplier must be positive, got {}",
                        overlap_multiplier));
    }
}

LevelGeometry make_level_geometry(const Domain& domain, int r_interior,
                                  int n_buffer, double overlap_multiplier) {
    return LevelGeometry(domain, r_interior, n_buffer, overlap_multiplier);
}

CoarseGrid::CoarseGrid(const FineGrid& fine, int n_tilde_x, int n_tilde_y,
                       CoarseMode mode, int m_x, int m_y)
    : fine_(fine), ntx_(n_tilde_x), nty_(n_tilde_y), mode_(mode), mx_(m_x), my_(m_y) {}

double CoarseGrid::x(int p) const {
    if (is_strict()) return fine_.x(p * mx_);
    return fine_.domain().x_min + p * (fine_.domain().width() / (ntx_ - 1));
}

double CoarseGrid::y(int q) const {
    if (is_strict()) return fine_.y(q * my_);
    return fine_.domain().y_min + q * (fine_.domain().height() / (nty_ - 1));
}

int CoarseGrid::fine_ix(int p) const {
    if (!is_strict()) {
        throw std::logic_error("CoarseGrid::fine_ix: relaxed grids are not "
                               "index-aligned with the fine grid");
    }
    return p * mx_;
}

int CoarseGrid::fine_iy(int q) const {
    if (!is_strict()) {
        throw std::logic_error("CoarseGrid::fine_iy: relaxed grids are not "
                               "index-aligned with the fine grid");
    }
    return q * my_;
}

namespace {

// Nearest side length to `target` admitting n = M(nt - 1) + 1 with integer
// M >= 2 and nt within [lo, hi]. Returns 0 when none exists.
int nearest_strict_side(int n, int target, int lo, int hi) {
    int best = 0;
    long best_dist = std::numeric_limits<long>::max();
    for (int nt = lo; nt <= hi; ++nt) {
        if ((n - 1) % (nt - 1) != 0) continue;
        int m = (n - 1) / (nt - 1);
        if (m < 2) continue;
        long dist = std::labs(static_cast<long>(nt) - target);
        if (dist < best_dist) {
            best_dist = dist;
            best = nt;
        }
    }
    return best;
}

struct AxisChoice {
    int n_tilde;
    int m;
};

AxisChoice choose_axis(int n, int r_total, const SamplingRule& rule,
                       const char* axis) {
    const int nyquist = 2 * r_total + 1;
    if (nyquist >= n) {
        throw std::invalid_argument(
            fmt::format("make_coarse_grid: fine side {} ({} axis) cannot hold a "
                        "coarse grid with n_tilde >= 2*r_total+1 = {}",
                        n, axis, nyquist));
    }
    if (rule.mode == CoarseMode::strict) {
        if (rule.n_tilde > 0) {
            const int nt = rule.n_tilde;
            if (nt < nyquist) {
                throw std::invalid_argument(fmt::format(
                    "make_coarse_grid: n_tilde = {} is below the sampling limit "
                    "2*r_total+1 = {} ({} axis)",
                    nt, nyquist, axis));
            }
            if (nt >= n || (n - 1) % (nt - 1) != 0 || (n - 1) / (nt - 1) < 2) {
                throw std::invalid_argument(fmt::format(
                    "make_coarse_grid: strict mode needs n = M(n_tilde-1)+1 with "
                    "integer M >= 2; no such M for n = {}, n_tilde = {} ({} axis)",
                    n, nt, axis));
            }
            return {nt, (n - 1) / (nt - 1)};
        }
        const int target = 4 * r_total;
        const int hi = (n - 1) / 2 + 1;  // M >= 2
        const int nt = nearest_strict_side(n, target, nyquist, hi);
        if (nt == 0) {
            throw std::invalid_argument(fmt::format(
                "make_coarse_grid: no strict coarse side in [{}, {}] divides the "
                "fine side {} ({} axis); use relaxed mode or change n",
                nyquist, hi, n, axis));
        }
        return {nt, (n - 1) / (nt - 1)};
    }
    // relaxed: any n_tilde in [2*r_total+1, n)
    int nt = rule.n_tilde > 0 ? rule.n_tilde : std::min(4 * r_total, n - 1);
    if (nt < nyquist) {
        throw std::invalid_argument(fmt::format(
            "make_coarse_grid: n_tilde = {} is below the sampling limit "
            "2*r_total+1 = {} ({} axis)",
            nt, nyquist, axis));
    }
    if (nt >= n) {
        throw std::invalid_argument(fmt::format(
            "make_coarse_grid: relaxed mode needs n_tilde < n, got {} >= {} ({} axis)",
            nt, n, axis));
    }
    return {nt, 0};
}

} // namespace

CoarseGrid make_coarse_grid(const FineGrid& fine, const LevelGeometry& geometry,
                            const SamplingRule& rule) {
    const Domain& fd = fine.domain();
    const Domain& gd = geometry.domain();
    if (fd.x_min != gd.x_min || fd.x_max != gd.x_max || fd.y_min != gd.y_min ||
        fd.y_max != gd.y_max) {
        throw std::invalid_argument(
            "make_coarse_grid: fine grid and geometry must share a domain");
    }
    AxisChoice cx = choose_axis(fine.nx(), geometry.r_total(), rule, "x");
    AxisChoice cy = choose_axis(fine.ny(), geometry.r_total(), rule, "y");
    return CoarseGrid(fine, cx.n_tilde, cy.n_tilde, rule.mode, cx.m, cy.m);
}

} // namespace gridnorm
