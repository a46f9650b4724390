#include "gridnorm/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

namespace gridnorm {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix_csv(const Eigen::ArrayXXd& values,
                      const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error(
            fmt::format("write_matrix_csv: cannot open {}", path.string()));
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j > 0) os << ',';
            os << format_double(values(i, j));
        }
        os << '\n';
    }
    if (!os) {
        throw std::runtime_error(
            fmt::format("write_matrix_csv: write failed for {}", path.string()));
    }
}

Eigen::ArrayXXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error(
            fmt::format("read_matrix_csv: cannot open {}", path.string()));
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error(
                fmt::format("read_matrix_csv: ragged rows in {}", path.string()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::runtime_error(
            fmt::format("read_matrix_csv: {} is empty", path.string()));
    }
    Eigen::ArrayXXd out(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        }
    }
    return out;
}

void write_dataset_csv(const Eigen::ArrayXXd& field,
                       const std::vector<std::int64_t>& observed,
                       const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error(
            fmt::format("write_dataset_csv: cannot open {}", path.string()));
    }
    const int nx = static_cast<int>(field.cols());
    std::vector<char> is_obs(static_cast<std::size_t>(field.size()), 0);
    for (std::int64_t idx : observed) {
        is_obs[static_cast<std::size_t>(idx)] = 1;
    }
    os << "i,j,value,observed\n";
    for (std::int64_t idx = 0; idx < field.size(); ++idx) {
        os << idx % nx << ',' << idx / nx << ','
           << format_double(field(idx / nx, idx % nx)) << ','
           << int(is_obs[static_cast<std::size_t>(idx)]) << '\n';
    }
}

} // namespace gridnorm
