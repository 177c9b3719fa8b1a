#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "poseinit/geometry.hpp"
#include "poseinit/image.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/rng.hpp"
#include "poseinit/volume.hpp"

namespace testing {

// Reduced-resolution setup used wherever a test renders many images: 64^3
// phantom at 4 mm (same 256 mm extent as 128^3 at 2 mm) and a 32x32 detector
// with the same 278.5 mm field of view.
inline poseinit::CameraGeometry desk_camera() {
    poseinit::CameraGeometry c;
    c.detector_rows = 32;
    c.detector_cols = 32;
    c.pixel_spacing_mm = 2.176 * 4.0;
    return c;
}

inline poseinit::ProjectionConfig desk_projection() {
    poseinit::ProjectionConfig p;
    p.n_samples_per_ray = 64;
    return p;
}

inline const poseinit::Volume& desk_phantom() {
    static const poseinit::Volume v = poseinit::make_phantom({64, 64, 64}, 4.0, {});
    return v;
}

inline poseinit::DetectorImage random_image(int rows, int cols, std::uint64_t seed) {
    poseinit::Rng rng(seed);
    poseinit::DetectorImage img(rows, cols, 1.0);
    for (auto& x : img.data) {
        x = rng.uniform(-1.0, 1.0);
    }
    return img;
}

inline double max_abs_diff(const poseinit::Mat3& a, const poseinit::Mat3& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("poseinit_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
