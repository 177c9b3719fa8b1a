#pragma once

#include <filesystem>
#include <vector>

namespace poseinit {

/// Row-major detector image. Row 0 is the top of the detector (largest y).
struct DetectorImage {
    int rows = 0;
    int cols = 0;
    double pixel_spacing_mm = 1.0;
    std::vector<double> data;

    DetectorImage() = default;
    DetectorImage(int r, int c, double spacing, double fill = 0.0)
        : rows(r), cols(c), pixel_spacing_mm(spacing),
          data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const DetectorImage& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const DetectorImage&) const = default;
};

/// Min-max rescale to [0, 1]; a constant image maps to all zeros.
DetectorImage normalized(const DetectorImage& img);

/// Persisted with the volume raw+json layout: dims = [cols, rows, 1].
void save_image(const DetectorImage& img, const std::filesystem::path& base);
DetectorImage load_image(const std::filesystem::path& base);

/// 16-bit grayscale PNG after min-max normalization.
void write_png_gray16(const DetectorImage& img, const std::filesystem::path& path);

/// 8-bit RGB PNG of a signed image with a blue-white-red diverging map:
/// -limit -> (0, 0, 255), 0 -> (255, 255, 255), +limit -> (255, 0, 0).
/// limit <= 0 selects max |value|.
void write_png_diverging(const DetectorImage& img, const std::filesystem::path& path,
                         double limit = 0.0);

}  // namespace poseinit
