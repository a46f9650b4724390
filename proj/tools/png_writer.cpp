#include "png_writer.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace gridnorm_cli {

namespace {

// Coarse viridis control points, linearly interpolated.
constexpr unsigned char kRamp[][3] = {
    {68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142},
    {33, 144, 141}, {39, 173, 129}, {92, 200, 99},  {170, 220, 50},
    {253, 231, 37},
};
constexpr int kRampSize = sizeof(kRamp) / sizeof(kRamp[0]);

void color_of(double t, unsigned char* rgb) {
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    const double pos = t * (kRampSize - 1);
    const int lo = static_cast<int>(pos);
    const int hi = lo + 1 < kRampSize ? lo + 1 : lo;
    const double w = pos - lo;
    for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<unsigned char>((1.0 - w) * kRamp[lo][c] +
                                            w * kRamp[hi][c] + 0.5);
    }
}

} // namespace

void write_heatmap_png(const Eigen::ArrayXXd& values,
                       const std::filesystem::path& path) {
    const int height = static_cast<int>(values.rows());
    const int width = static_cast<int>(values.cols());
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    const double scale = hi > lo ? 1.0 / (hi - lo) : 0.0;

    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
        std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) {
        throw std::runtime_error("write_heatmap_png: cannot open " +
                                 path.string());
    }
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_heatmap_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_heatmap_png: libpng write failed for " +
                                 path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
    for (int iy = 0; iy < height; ++iy) {
        const int src = height - 1 - iy;  // row 0 at the bottom
        for (int ix = 0; ix < width; ++ix) {
            color_of((values(src, ix) - lo) * scale, &row[3 * ix]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace gridnorm_cli
