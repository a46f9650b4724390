#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace gridnorm_cli {

/// Heatmap PNG of a field: values min-max normalized onto a viridis-style
/// ramp, row 0 of the array at the bottom of the image.
void write_heatmap_png(const Eigen::ArrayXXd& values,
                       const std::filesystem::path& path);

} // namespace gridnorm_cli
