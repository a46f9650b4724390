#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridnorm/basis.hpp"
#include "gridnorm/fftnorm.hpp"
#include "gridnorm/grid.hpp"

namespace gridnorm {

enum class NormalizeMethod { none, exact, exactKronecker, fft, both };

const char* to_string(NormalizeMethod m);
NormalizeMethod normalize_method_from_string(const std::string& name);

/// Multi-resolution model description: one geometry per level, per-level SAR
/// shift kappa2 and weight alpha (positive, summing to 1), measurement-error
/// variance tau2, and the normalization method.
struct ModelSpec {
    std::vector<LevelGeometry> levels;
    std::vector<double> kappa2;
    std::vector<double> alpha;  // empty -> equal weights
    double tau2 = 0.0;
    NormalizeMethod method = NormalizeMethod::exact;

    std::size_t level_count() const { return levels.size(); }
    std::vector<double> effective_alpha() const;
    void validate() const;
};

struct MaternParams {
    double range = 1.0;      // theta
    double smoothness = 1.0; // nu
    double variance = 1.0;   // sigma^2
    double nugget = 0.0;     // measurement-noise variance

    void validate() const;
};

/// Matern correlation scaled to sigma^2 at distance zero:
/// C(d) = sigma^2 * 2^(1-nu)/Gamma(nu) * (d/theta)^nu * K_nu(d/theta).
double matern_covariance(double distance, const MaternParams& params);

struct SimulationResult {
    Eigen::ArrayXXd truth;     // Gaussian field draw
    Eigen::ArrayXXd observed;  // truth + N(0, nugget) noise
};

/// Stationary Gaussian field draw via circulant embedding. The embedding
/// torus starts at twice the grid extent and expands (up to 8x) until the
/// circulant spectrum is non-negative; failure past the cap is reported.
/// Deterministic for a fixed seed.
SimulationResult simulate_matern(const FineGrid& grid, const MaternParams& params,
                                 std::uint64_t seed);

struct Dataset {
    std::vector<std::int64_t> observed;  // ascending fine-grid indices
    std::vector<std::int64_t> held_out;  // ascending, disjoint from observed
    Eigen::VectorXd values;              // observation values, observed order

    void validate(std::int64_t grid_count) const;
};

/// Keep ceil(fraction * N) uniformly random locations; the complement is the
/// held-out set. fraction must lie in (0, 1); by the ceiling rule a fraction
/// within 1/N of 1 retains everything, leaving an empty held-out set.
Dataset sample_mar(const Eigen::ArrayXXd& field, double fraction,
                   std::uint64_t seed);

struct Block {
    int row = 0;  // iy of the top edge
    int col = 0;  // ix of the left edge
    int side = 0;

    bool overlaps(const Block& other) const;
};

/// Hold out the cells of the given non-overlapping square blocks.
Dataset sample_blocks(const Eigen::ArrayXXd& field,
                      const std::vector<Block>& blocks);

/// Per-level method split for ModelSpec::method == both: a level upsamples
/// through the FFT when 4 * r_total <= n / 2, otherwise it uses the
/// eigen-decomposition route.
std::vector<NormalizeMethod> select_methods(const ModelSpec& spec,
                                            const FineGrid& fine);

struct FitOptions {
    /// Covariate design at observed locations; empty means intercept only.
    Eigen::MatrixXd design_obs;
    /// Covariate design at all grid locations (required with design_obs).
    Eigen::MatrixXd design_grid;
    /// Coarse-grid rule for fft levels. Strict by default; when the fine
    /// side admits no strict coarse grid the fit falls back to relaxed.
    SamplingRule coarse_rule{CoarseMode::strict, 0};
    CoarseMethod fft_coarse = CoarseMethod::kronecker;
    /// Externally supplied per-level variance fields (testing hook); entries
    /// with zero size fall through to the regular computation.
    std::vector<VarianceField> variance_override;
};

struct FittedModel {
    ModelSpec spec;
    FineGrid grid;
    std::vector<NormalizeMethod> level_methods;
    std::vector<SparseBasisMatrix> phi_star;   // full grid, one per level
    std::vector<VarianceField> variance;       // empty values when unnormalized
    Eigen::VectorXd beta;
    Eigen::VectorXd coefficients;              // stacked per-level blocks
    std::vector<std::int64_t> level_offsets;   // into coefficients
    Eigen::MatrixXd design_grid;               // empty means intercept only
};

/// Generalized-least-squares fit: per-level variance fields on the full grid,
/// normalized basis blocks, then the coefficient system
/// (Phi^T Phi + tau2 * blockdiag(Q_l / alpha_l)) c = Phi^T (Z - X beta),
/// with beta from GLS under covariance Phi Sigma Phi^T + tau2 I evaluated
/// through the Woodbury identity.
FittedModel fit(const Dataset& data, const ModelSpec& spec, const FineGrid& fine,
                const FitOptions& options = {});

/// Prediction surface on the model's grid: X beta + sum_l Phi*_l c_l.
Eigen::ArrayXXd predict(const FittedModel& model, const FineGrid& grid);

struct Metrics {
    double mae = 0.0;
    double rmspe = 0.0;
};

Metrics metrics(const Eigen::ArrayXXd& pred, const Eigen::ArrayXXd& truth,
                const std::vector<std::int64_t>& mask);

} // namespace gridnorm
