#pragma once

#include <cstdint>

#include "poseinit/geometry.hpp"
#include "poseinit/image.hpp"
#include "poseinit/volume.hpp"

namespace poseinit {

struct ProjectionConfig {
    int n_samples_per_ray = 256;
    bool normalize_output = true;

    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

/// Ray from the source through the center of detector pixel (row, col).
Ray ray_for_pixel(const CameraGeometry& cam, int row, int col);

/// Detector-plane position (mm) of the center of pixel (row, col). Rows grow
/// downward (decreasing y), columns grow to the right (increasing x).
Vec3 pixel_center(const CameraGeometry& cam, double row, double col);

/// Digitally reconstructed radiograph of v posed by theta. Each pixel is the
/// sum of trilinear samples of v at T(theta)^-1 x over n equispaced points on
/// the chord of the volume's bounding sphere, times the step length in mm.
DetectorImage render_drr(const Volume& v, const PoseParams& theta, const CameraGeometry& cam,
                         const ProjectionConfig& cfg);

/// Adds i.i.d. Gaussian noise of standard deviation sigma to every pixel.
DetectorImage add_gaussian_noise(const DetectorImage& img, double sigma, std::uint64_t seed);

void to_json(nlohmann::json& j, const ProjectionConfig& c);
void from_json(const nlohmann::json& j, ProjectionConfig& c);

}  // namespace poseinit
