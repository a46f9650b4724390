#pragma once

#include <Eigen/Dense>
#include <complex>

#include "gridnorm/basis.hpp"
#include "gridnorm/grid.hpp"
#include "gridnorm/sar.hpp"

namespace gridnorm {

/// Two-dimensional DFT coefficients, DC component at index (0, 0); entry
/// (ky, kx) is the coefficient for frequency pair (kx, ky). The spectrum of
/// a real field is conjugate-symmetric: S(ky, kx) = conj(S(-ky mod n, -kx mod n)).
struct Spectrum {
    Eigen::ArrayXXcd values;  // (ny rows, nx cols)

    int nx() const { return static_cast<int>(values.cols()); }
    int ny() const { return static_cast<int>(values.rows()); }
};

/// Unnormalized forward DFT of a real field.
Spectrum forward_dft(const Eigen::ArrayXXd& field);

/// Zero-pad a spectrum to n_star_x x n_star_y: low-frequency quadrants copied
/// to the four corners of the enlarged array, zeros elsewhere. For an even
/// side the Nyquist row/column coefficient is split (halved into both mirror
/// positions) so the padded spectrum stays conjugate-symmetric and the
/// inverse transform stays real.
Spectrum zero_pad_spectrum(const Spectrum& coarse, int n_star_x, int n_star_y);

/// Upsampling by zero-padding in the frequency domain: forward DFT, pad to
/// (m_x * nx, m_y * ny), inverse DFT with amplitude rescaling so constant
/// fields pass through unchanged, then drop the last m-1 rows and columns.
/// Output side lengths are m * (n - 1) + 1 per axis; the input samples are
/// reproduced exactly at stride-m positions. Aborts if the imaginary
/// residual before truncation exceeds 1e-8 * max|field|.
Eigen::ArrayXXd fourier_interpolate(const Eigen::ArrayXXd& coarse_field, int m_x,
                                    int m_y);
inline Eigen::ArrayXXd fourier_interpolate(const Eigen::ArrayXXd& coarse_field,
                                           int m) {
    return fourier_interpolate(coarse_field, m, m);
}

/// Evaluate the trigonometric interpolant of `coarse_field` on an arbitrary
/// uniform target grid: output point i sits at coarse-sample coordinate
/// i * stride per axis. Used when the fine side is not an integer multiple
/// of the coarse cell count (relaxed coarse grids); positions are exact, so
/// the cost is two small dense products instead of a padded inverse FFT.
Eigen::ArrayXXd fourier_resample(const Eigen::ArrayXXd& coarse_field, int nx,
                                 int ny, double stride_x, double stride_y);

enum class CoarseMethod { exact, kronecker };

/// Approximate variance on the fine grid: exact variance on the coarse grid
/// (eigen route by default), then spectral upsampling. Aborts if any
/// upsampled variance is non-positive (signals insufficient n_tilde or
/// buffer).
VarianceField variance_fft(const LevelGeometry& geometry, const FineGrid& fine,
                           const CoarseGrid& coarse, const SarSystem& sys,
                           CoarseMethod coarse_method = CoarseMethod::kronecker,
                           int level = 0);

/// Intermediate products of variance_fft, for diagnostics and figure dumps.
struct FftStages {
    Eigen::ArrayXXd coarse_field;
    Eigen::ArrayXXd padded_log_magnitude;  // log10(|padded spectrum| + eps)
    Eigen::ArrayXXd fine_field;
};

VarianceField variance_fft_with_stages(const LevelGeometry& geometry,
                                       const FineGrid& fine,
                                       const CoarseGrid& coarse,
                                       const SarSystem& sys,
                                       CoarseMethod coarse_method,
                                       FftStages* stages, int level = 0);

} // namespace gridnorm
