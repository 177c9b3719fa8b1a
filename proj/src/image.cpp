#include "poseinit/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "poseinit/errors.hpp"
#include "poseinit/grid_io.hpp"

namespace poseinit {

DetectorImage normalized(const DetectorImage& img) {
    DetectorImage out = img;
    if (img.data.empty()) {
        return out;
    }
    const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    for (double& v : out.data) {
        v = range > 0.0 ? (v - lo) / range : 0.0;
    }
    return out;
}

void save_image(const DetectorImage& img, const std::filesystem::path& base) {
    std::vector<float> data(img.data.begin(), img.data.end());
    grid_io::write(base, {img.cols, img.rows, 1}, img.pixel_spacing_mm, data);
}

DetectorImage load_image(const std::filesystem::path& base) {
    auto g = grid_io::read(base);
    if (g.dims[2] != 1) {
        throw IoError("expected a 2D image (nz = 1) in " + base.string());
    }
    DetectorImage img;
    img.cols = g.dims[0];
    img.rows = g.dims[1];
    img.pixel_spacing_mm = g.spacing_mm;
    img.data.assign(g.data.begin(), g.data.end());
    return img;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, const std::vector<std::vector<png_byte>>& rows) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) {
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_gray16(const DetectorImage& img, const std::filesystem::path& path) {
    const DetectorImage n = normalized(img);
    std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(img.rows));
    for (int r = 0; r < img.rows; ++r) {
        auto& row = rows[static_cast<std::size_t>(r)];
        row.resize(static_cast<std::size_t>(img.cols) * 2);
        for (int c = 0; c < img.cols; ++c) {
            const auto v = static_cast<unsigned>(std::lround(n.at(r, c) * 65535.0));
            row[2 * c] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
            row[2 * c + 1] = static_cast<png_byte>(v & 0xff);
        }
    }
    write_png(path, img.cols, img.rows, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png_diverging(const DetectorImage& img, const std::filesystem::path& path,
                         double limit) {
    if (limit <= 0.0) {
        for (double v : img.data) {
            limit = std::max(limit, std::abs(v));
        }
    }
    std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(img.rows));
    for (int r = 0; r < img.rows; ++r) {
        auto& row = rows[static_cast<std::size_t>(r)];
        row.resize(static_cast<std::size_t>(img.cols) * 3);
        for (int c = 0; c < img.cols; ++c) {
            const double s = limit > 0.0 ? std::clamp(img.at(r, c) / limit, -1.0, 1.0) : 0.0;
            const auto fade = static_cast<png_byte>(std::lround(255.0 * (1.0 - std::abs(s))));
            png_byte red = 255, green = fade, blue = 255;
            if (s > 0.0) {
                blue = fade;
            } else {
                red = fade;
            }
            row[3 * c] = red;
            row[3 * c + 1] = green;
            row[3 * c + 2] = blue;
        }
    }
    write_png(path, img.cols, img.rows, 8, PNG_COLOR_TYPE_RGB, rows);
}

}  // namespace poseinit
