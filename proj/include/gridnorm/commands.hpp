#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "gridnorm/config.hpp"

namespace gridnorm {

/// Heatmap emitter injected by the CLI when --png is given; the command layer
/// itself has no imaging dependency.
using ImageWriter =
    std::function<void(const Eigen::ArrayXXd&, const std::filesystem::path&)>;

struct CommandOptions {
    std::filesystem::path out_dir;  // empty: use config's output directory
    bool deterministic = false;
    std::optional<NormalizeMethod> method_override;
    ImageWriter image_writer;  // null unless PNG output requested
};

/// Each command returns a process exit status: 0 when every requested piece
/// of work succeeded. Partial results are flushed as they are produced.
int cmd_normalize(const RunConfig& config, const CommandOptions& options);
int cmd_bench(const RunConfig& config, const CommandOptions& options);
int cmd_error(const RunConfig& config, const CommandOptions& options);
int cmd_pipeline(const RunConfig& config, const CommandOptions& options);

} // namespace gridnorm
