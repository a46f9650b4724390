#include "gridnorm/fftnorm.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

#include "gridnorm/kron.hpp"

namespace gridnorm {

namespace {

// FFTW's planner is not thread-safe; executions on distinct plans are.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place 2-D c2c transform of a column-major (ny, nx) Eigen array. The 2-D
// DFT is axis-symmetric, so handing FFTW the column-major buffer with swapped
// extents transforms both axes with the layout unchanged.
void dft_2d_inplace(Eigen::ArrayXXcd& data, int sign) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(data.cols()),
                                static_cast<int>(data.rows()), ptr, ptr, sign,
                                FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw std::runtime_error("fftnorm: FFTW plan creation failed");
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

struct PadEntry {
    int src;
    int dst;
    double weight;
};

// Per-axis padding map from side nt to side ns >= nt. Low block of size
// ceil(nt/2) keeps its indices, the high block shifts by ns - nt, and for
// even nt the Nyquist coefficient splits in half between the two mirror
// positions.
std::vector<PadEntry> axis_pad_map(int nt, int ns) {
    std::vector<PadEntry> map;
    map.reserve(nt + 1);
    if (nt % 2 == 0) {
        const int m = nt / 2;
        for (int p = 0; p < nt; ++p) {
            if (p < m) {
                map.push_back({p, p, 1.0});
            } else if (p == m) {
                map.push_back({p, m, 0.5});
                map.push_back({p, ns - m, 0.5});
            } else {
                map.push_back({p, p + ns - nt, 1.0});
            }
        }
    } else {
        const int m = (nt + 1) / 2;
        for (int p = 0; p < nt; ++p) {
            map.push_back({p, p < m ? p : p + ns - nt, 1.0});
        }
    }
    return map;
}

void check_finite(const Eigen::ArrayXXd& field, const char* who) {
    if (!field.isFinite().all()) {
        throw std::invalid_argument(
            fmt::format("{}: input field contains non-finite values", who));
    }
}

Eigen::ArrayXXd take_real_checked(const Eigen::ArrayXXcd& data, const char* who) {
    const double max_real = data.real().abs().maxCoeff();
    const double max_imag = data.imag().abs().maxCoeff();
    if (max_imag > 1e-8 * std::max(max_real, 1e-300)) {
        throw std::runtime_error(fmt::format(
            "{}: imaginary residual {} exceeds 1e-8 * max|field| = {} "
            "(padding symmetry violated)",
            who, max_imag, 1e-8 * max_real));
    }
    return data.real();
}

} // namespace

Spectrum forward_dft(const Eigen::ArrayXXd& field) {
    Spectrum s;
    s.values = field.cast<std::complex<double>>();
    dft_2d_inplace(s.values, FFTW_FORWARD);
    return s;
}

Spectrum zero_pad_spectrum(const Spectrum& coarse, int n_star_x, int n_star_y) {
    const int ntx = coarse.nx();
    const int nty = coarse.ny();
    if (n_star_x < ntx || n_star_y < nty) {
        throw std::invalid_argument(
            fmt::format("zero_pad_spectrum: target {} x {} smaller than source "
                        "{} x {}",
                        n_star_x, n_star_y, ntx, nty));
    }
    Spectrum out;
    out.values = Eigen::ArrayXXcd::Zero(n_star_y, n_star_x);
    const auto map_x = axis_pad_map(ntx, n_star_x);
    const auto map_y = axis_pad_map(nty, n_star_y);
    for (const auto& ey : map_y) {
        for (const auto& ex : map_x) {
            out.values(ey.dst, ex.dst) +=
                ey.weight * ex.weight * coarse.values(ey.src, ex.src);
        }
    }
    return out;
}

Eigen::ArrayXXd fourier_interpolate(const Eigen::ArrayXXd& coarse_field, int m_x,
                                    int m_y) {
    if (m_x < 1 || m_y < 1) {
        throw std::invalid_argument(fmt::format(
            "fourier_interpolate: scale factors must be >= 1, got {} x {}", m_x,
            m_y));
    }
    check_finite(coarse_field, "fourier_interpolate");
    const int ntx = static_cast<int>(coarse_field.cols());
    const int nty = static_cast<int>(coarse_field.rows());
    const int nsx = m_x * ntx;
    const int nsy = m_y * nty;

    Spectrum spec = forward_dft(coarse_field);
    Spectrum padded = zero_pad_spectrum(spec, nsx, nsy);
    dft_2d_inplace(padded.values, FFTW_BACKWARD);
    // Unnormalized round trip gains nt_x * nt_y; dividing by it makes the
    // interpolant pass through the samples (constant fields stay constant).
    padded.values /= static_cast<double>(ntx) * nty;
    Eigen::ArrayXXd full = take_real_checked(padded.values, "fourier_interpolate");

    const int nx = m_x * (ntx - 1) + 1;
    const int ny = m_y * (nty - 1) + 1;
    return full.topLeftCorner(ny, nx);
}

Eigen::ArrayXXd fourier_resample(const Eigen::ArrayXXd& coarse_field, int nx,
                                 int ny, double stride_x, double stride_y) {
    if (nx < 1 || ny < 1 || !(stride_x > 0.0) || !(stride_y > 0.0)) {
        throw std::invalid_argument("fourier_resample: invalid target shape");
    }
    check_finite(coarse_field, "fourier_resample");
    const int ntx = static_cast<int>(coarse_field.cols());
    const int nty = static_cast<int>(coarse_field.rows());

    Spectrum spec = forward_dft(coarse_field);

    // E(i, k) = basis function k of the coarse-grid trig interpolant at
    // position i * stride; Nyquist column becomes a pure cosine.
    auto eval_matrix = [](int n, int nt, double stride) {
        Eigen::MatrixXcd e(n, nt);
        const bool even = nt % 2 == 0;
        const int half = even ? nt / 2 : (nt + 1) / 2;
        for (int k = 0; k < nt; ++k) {
            double freq;
            if (k < half) {
                freq = k;
            } else if (even && k == half) {
                freq = half;  // handled below
            } else {
                freq = k - nt;
            }
            for (int i = 0; i < n; ++i) {
                const double angle = 2.0 * M_PI * freq * (i * stride) / nt;
                if (even && k == half) {
                    e(i, k) = std::complex<double>(std::cos(angle), 0.0);
                } else {
                    e(i, k) = std::complex<double>(std::cos(angle), std::sin(angle));
                }
            }
        }
        return e;
    };

    Eigen::MatrixXcd ey = eval_matrix(ny, nty, stride_y);
    Eigen::MatrixXcd ex = eval_matrix(nx, ntx, stride_x);
    Eigen::MatrixXcd s = spec.values.matrix();
    Eigen::MatrixXcd out = ey * s * ex.transpose();
    out /= static_cast<double>(ntx) * nty;
    return take_real_checked(out.array(), "fourier_resample");
}

VarianceField variance_fft_with_stages(const LevelGeometry& geometry,
                                       const FineGrid& fine,
                                       const CoarseGrid& coarse,
                                       const SarSystem& sys,
                                       CoarseMethod coarse_method,
                                       FftStages* stages, int level) {
    if (coarse.fine().nx() != fine.nx() || coarse.fine().ny() != fine.ny()) {
        throw std::invalid_argument(
            "variance_fft: coarse grid was built from a different fine grid");
    }
    if (sys.r_total() != geometry.r_total()) {
        throw std::invalid_argument(
            fmt::format("variance_fft: SAR system r_total {} vs geometry {}",
                        sys.r_total(), geometry.r_total()));
    }

    SparseBasisMatrix phi_coarse = regression_matrix(coarse, geometry);
    VarianceField coarse_var;
    if (coarse_method == CoarseMethod::kronecker) {
        KroneckerEig eig =
            eigendecompose(build_tridiagonal(sys.r_total(), sys.kappa2()));
        coarse_var = variance_kronecker(phi_coarse, eig, coarse.n_tilde_x(),
                                        coarse.n_tilde_y(), level);
    } else {
        coarse_var = variance_exact(phi_coarse, sys, coarse.n_tilde_x(),
                                    coarse.n_tilde_y(), level);
    }

    Eigen::ArrayXXd fine_values;
    if (coarse.is_strict()) {
        fine_values = fourier_interpolate(coarse_var.values, coarse.scale_x(),
                                          coarse.scale_y());
    } else {
        const double stride_x =
            static_cast<double>(coarse.n_tilde_x() - 1) / (fine.nx() - 1);
        const double stride_y =
            static_cast<double>(coarse.n_tilde_y() - 1) / (fine.ny() - 1);
        fine_values = fourier_resample(coarse_var.values, fine.nx(), fine.ny(),
                                       stride_x, stride_y);
    }
    if (fine_values.rows() != fine.ny() || fine_values.cols() != fine.nx()) {
        throw std::logic_error("variance_fft: upsampled field has wrong shape");
    }

    for (int iy = 0; iy < fine.ny(); ++iy) {
        for (int ix = 0; ix < fine.nx(); ++ix) {
            if (!(fine_values(iy, ix) > 0.0)) {
                throw std::runtime_error(fmt::format(
                    "variance_fft: non-positive variance {} at grid location "
                    "(ix={}, iy={}); increase n_tilde or the buffer",
                    fine_values(iy, ix), ix, iy));
            }
        }
    }

    if (stages != nullptr) {
        stages->coarse_field = coarse_var.values;
        Spectrum padded = zero_pad_spectrum(
            forward_dft(coarse_var.values),
            coarse.is_strict() ? coarse.scale_x() * coarse.n_tilde_x()
                               : fine.nx(),
            coarse.is_strict() ? coarse.scale_y() * coarse.n_tilde_y()
                               : fine.ny());
        stages->padded_log_magnitude =
            (padded.values.abs() + 1e-300).log10();
        stages->fine_field = fine_values;
    }

    VarianceField out;
    out.values = std::move(fine_values);
    out.method = VarianceField::Method::fft;
    out.level = level;
    return out;
}

VarianceField variance_fft(const LevelGeometry& geometry, const FineGrid& fine,
                           const CoarseGrid& coarse, const SarSystem& sys,
                           CoarseMethod coarse_method, int level) {
    return variance_fft_with_stages(geometry, fine, coarse, sys, coarse_method,
                                    nullptr, level);
}

} // namespace gridnorm
