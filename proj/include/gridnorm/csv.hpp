#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gridnorm {

/// Row-major matrix CSV: one grid row per line, comma separator, '.' decimal,
/// no header, full double round-trip precision.
void write_matrix_csv(const Eigen::ArrayXXd& values,
                      const std::filesystem::path& path);

Eigen::ArrayXXd read_matrix_csv(const std::filesystem::path& path);

/// Dataset CSV with header i,j,value,observed covering every grid cell.
void write_dataset_csv(const Eigen::ArrayXXd& field,
                       const std::vector<std::int64_t>& observed,
                       const std::filesystem::path& path);

std::string format_double(double v);

} // namespace gridnorm
