#include "poseinit/projector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "poseinit/parallel.hpp"
#include "poseinit/rng.hpp"

namespace poseinit {

void ProjectionConfig::validate() const {
    if (n_samples_per_ray < 32) {
        throw std::invalid_argument("projection: n_samples_per_ray must be >= 32");
    }
}

Vec3 pixel_center(const CameraGeometry& cam, double row, double col) {
    const double x = (col - (cam.detector_cols - 1) / 2.0) * cam.pixel_spacing_mm;
    const double y = ((cam.detector_rows - 1) / 2.0 - row) * cam.pixel_spacing_mm;
    return {x, y, cam.source_to_detector_mm - cam.source_to_iso_mm};
}

Ray ray_for_pixel(const CameraGeometry& cam, int row, int col) {
    if (row < 0 || row >= cam.detector_rows || col < 0 || col >= cam.detector_cols) {
        throw std::invalid_argument("ray_for_pixel: pixel (" + std::to_string(row) + ", " +
                                    std::to_string(col) + ") outside the detector");
    }
    const Vec3 source(0.0, 0.0, -cam.source_to_iso_mm);
    return {source, (pixel_center(cam, row, col) - source).normalized()};
}

namespace {

// Zero-padded trilinear lookup in index coordinates. Same semantics as
// trilinear_sample, without the world-to-index conversion.
inline double sample_index(const float* data, int nx, int ny, int nz, double x, double y,
                           double z) {
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    const double fz0 = std::floor(z);
    const int i = static_cast<int>(fx0);
    const int j = static_cast<int>(fy0);
    const int k = static_cast<int>(fz0);
    const double fx = x - fx0;
    const double fy = y - fy0;
    const double fz = z - fz0;
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = sy * static_cast<std::size_t>(ny);

    double c000, c100, c010, c110, c001, c101, c011, c111;
    if (i >= 0 && j >= 0 && k >= 0 && i + 1 < nx && j + 1 < ny && k + 1 < nz) {
        const float* p = data + i * sx + j * sy + k * sz;
        c000 = p[0];
        c100 = p[sx];
        c010 = p[sy];
        c110 = p[sy + sx];
        c001 = p[sz];
        c101 = p[sz + sx];
        c011 = p[sz + sy];
        c111 = p[sz + sy + sx];
    } else {
        auto val = [&](int a, int b, int c) -> double {
            if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) {
                return 0.0;
            }
            return data[a * sx + b * sy + c * sz];
        };
        c000 = val(i, j, k);
        c100 = val(i + 1, j, k);
        c010 = val(i, j + 1, k);
        c110 = val(i + 1, j + 1, k);
        c001 = val(i, j, k + 1);
        c101 = val(i + 1, j, k + 1);
        c011 = val(i, j + 1, k + 1);
        c111 = val(i + 1, j + 1, k + 1);
    }
    const double c00 = c000 + fx * (c100 - c000);
    const double c10 = c010 + fx * (c110 - c010);
    const double c01 = c001 + fx * (c101 - c001);
    const double c11 = c011 + fx * (c111 - c011);
    const double c0 = c00 + fy * (c10 - c00);
    const double c1 = c01 + fy * (c11 - c01);
    return c0 + fz * (c1 - c0);
}

// Range of sample indices [first, last) whose positions start + s * step fall
// strictly inside the padded grid (-1, n) on every axis.
void clip_samples(const Vec3& start, const Vec3& step, const std::array<int, 3>& dims, int n,
                  int& first, int& last) {
    double lo = 0.0;
    double hi = static_cast<double>(n);
    for (int a = 0; a < 3; ++a) {
        const double lower = -1.0;
        const double upper = static_cast<double>(dims[a]);
        if (step[a] == 0.0) {
            if (!(start[a] > lower && start[a] < upper)) {
                first = last = 0;
                return;
            }
            continue;
        }
        double s0 = (lower - start[a]) / step[a];
        double s1 = (upper - start[a]) / step[a];
        if (s0 > s1) {
            std::swap(s0, s1);
        }
        lo = std::max(lo, s0);
        hi = std::min(hi, s1);
    }
    // Widen by one sample on each side; the sampler itself returns zero
    // outside the padded grid, so this only guards against rounding.
    first = std::max(0, static_cast<int>(std::floor(lo)) - 1);
    last = std::min(n, static_cast<int>(std::ceil(hi)) + 1);
    if (last < first) {
        last = first;
    }
}

}  // namespace

DetectorImage render_drr(const Volume& v, const PoseParams& theta, const CameraGeometry& cam,
                         const ProjectionConfig& cfg) {
    cam.validate();
    cfg.validate();
    if (!theta.is_finite()) {
        throw std::invalid_argument("render_drr: non-finite pose");
    }

    const RigidTransform inv = transform_inverse(pose_to_transform(theta));
    const Vec3 source(0.0, 0.0, -cam.source_to_iso_mm);
    // Source in the volume frame, then in index coordinates.
    const Vec3 src_vol = apply_transform(inv, source);
    const double radius = v.bounding_radius_mm();
    const double inv_spacing = 1.0 / v.spacing_mm();
    const Vec3 origin = v.origin_mm();
    const auto dims = v.dims();
    const int n = cfg.n_samples_per_ray;
    const float* data = v.data().data();

    DetectorImage img(cam.detector_rows, cam.detector_cols, cam.pixel_spacing_mm);
    parallel_for(static_cast<std::size_t>(cam.detector_rows), [&](std::size_t rr) {
        const int row = static_cast<int>(rr);
        for (int col = 0; col < cam.detector_cols; ++col) {
            const Vec3 dir_world = (pixel_center(cam, row, col) - source).normalized();
            const Vec3 dir = inv.rotation * dir_world;
            // |src + l dir|^2 = radius^2
            const double b = src_vol.dot(dir);
            const double c = src_vol.squaredNorm() - radius * radius;
            const double disc = b * b - c;
            if (disc <= 0.0) {
                img.at(row, col) = 0.0;
                continue;
            }
            const double root = std::sqrt(disc);
            const double l0 = -b - root;
            const double step_mm = 2.0 * root / n;
            const Vec3 start = (src_vol + (l0 + 0.5 * step_mm) * dir - origin) * inv_spacing;
            const Vec3 step = dir * (step_mm * inv_spacing);
            int first = 0;
            int last = 0;
            clip_samples(start, step, dims, n, first, last);
            double sum = 0.0;
            for (int s = first; s < last; ++s) {
                const double x = start[0] + s * step[0];
                const double y = start[1] + s * step[1];
                const double z = start[2] + s * step[2];
                if (x > -1.0 && y > -1.0 && z > -1.0 && x < dims[0] && y < dims[1] &&
                    z < dims[2]) {
                    sum += sample_index(data, dims[0], dims[1], dims[2], x, y, z);
                }
            }
            img.at(row, col) = sum * step_mm;
        }
    });

    return cfg.normalize_output ? normalized(img) : img;
}

DetectorImage add_gaussian_noise(const DetectorImage& img, double sigma, std::uint64_t seed) {
    if (sigma <= 0.0) {
        return img;
    }
    DetectorImage out = img;
    Rng rng(seed);
    for (double& v : out.data) {
        v += sigma * rng.normal();
    }
    return out;
}

void to_json(nlohmann::json& j, const ProjectionConfig& c) {
    j = nlohmann::json{{"n_samples_per_ray", c.n_samples_per_ray},
                       {"normalize_output", c.normalize_output}};
}

void from_json(const nlohmann::json& j, ProjectionConfig& c) {
    c = ProjectionConfig{};
    c.n_samples_per_ray = j.value("n_samples_per_ray", c.n_samples_per_ray);
    c.normalize_output = j.value("normalize_output", c.normalize_output);
}

}  // namespace poseinit
