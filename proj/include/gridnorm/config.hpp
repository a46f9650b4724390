#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridnorm/grid.hpp"
#include "gridnorm/model.hpp"

namespace gridnorm {

struct LevelConfig {
    int r = 0;
    std::optional<int> n_buffer;
    std::optional<double> overlap;
    std::optional<double> kappa2;
    std::optional<double> alpha;
};

struct SamplingConfig {
    enum class Kind { mar, blocks };
    Kind kind = Kind::mar;
    double fraction = 0.2;
    std::vector<Block> blocks;
};

struct BenchConfig {
    std::vector<NormalizeMethod> methods;
    std::vector<int> r_values;
    std::vector<int> n_values;
    int repetitions = 5;
};

struct ErrorConfig {
    NormalizeMethod method = NormalizeMethod::fft;
    NormalizeMethod reference = NormalizeMethod::exact;
    bool dump_field = false;
};

struct PipelineConfig {
    std::vector<NormalizeMethod> methods;
};

/// How the coarse side length is chosen: the "4r" rule (default), the
/// "4r-3" rule, or an explicit side.
struct NTildeRule {
    enum class Kind { four_r, four_r_minus_3, explicit_value };
    Kind kind = Kind::four_r;
    int value = 0;

    int resolve(int r_total) const;
};

/// Parsed and validated JSON run configuration. Unknown keys anywhere in the
/// document are rejected before any computation starts.
struct RunConfig {
    Domain domain = Domain::square(-1.0, 1.0);
    int nx = 0;
    int ny = 0;

    std::vector<LevelConfig> levels;
    double kappa2 = 0.05;
    int n_buffer = 10;
    double overlap = 2.5;
    double tau2 = 0.2;
    NormalizeMethod normalize_method = NormalizeMethod::exact;
    CoarseMode coarse_mode = CoarseMode::strict;
    NTildeRule n_tilde_rule;

    std::optional<SamplingConfig> sampling;
    std::uint64_t seed = 0;
    std::optional<MaternParams> sim;
    std::optional<BenchConfig> bench;
    std::optional<ErrorConfig> error;
    std::optional<PipelineConfig> pipeline;
    bool dump_stages = false;
    std::string output = "out";

    FineGrid make_grid() const;
    LevelGeometry make_level(const LevelConfig& lc) const;
    std::vector<LevelGeometry> make_levels() const;
    SamplingRule make_sampling_rule(int r_total) const;
    /// Model spec for the configured levels with the given method.
    ModelSpec make_model_spec(NormalizeMethod method) const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace gridnorm
