#include "poseinit/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "poseinit/errors.hpp"
#include "poseinit/grid_io.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/rng.hpp"

namespace poseinit {

Volume::Volume(std::array<int, 3> dims, double spacing_mm)
    : Volume(dims, spacing_mm,
             std::vector<float>(static_cast<std::size_t>(std::max(dims[0], 0)) *
                                    std::max(dims[1], 0) * std::max(dims[2], 0),
                                0.0f)) {}

Volume::Volume(std::array<int, 3> dims, double spacing_mm, std::vector<float> data)
    : dims_(dims), spacing_(spacing_mm), data_(std::move(data)) {
    for (int a = 0; a < 3; ++a) {
        origin_[a] = -spacing_ * (dims_[a] - 1) / 2.0;
    }
    validate();
}

void Volume::validate() const {
    for (int d : dims_) {
        if (d < 2) {
            throw std::invalid_argument("volume: every dimension must be >= 2");
        }
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw std::invalid_argument("volume: spacing must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]) {
        throw std::invalid_argument("volume: data length does not match dims");
    }
    for (float v : data_) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw std::invalid_argument("volume: intensities must be finite and non-negative");
        }
    }
}

double Volume::bounding_radius_mm() const {
    // Half-extent of the grid plus the one-voxel padding band, per axis.
    Vec3 half;
    for (int a = 0; a < 3; ++a) {
        half[a] = spacing_ * (dims_[a] - 1) / 2.0 + spacing_;
    }
    return half.norm();
}

double Volume::max_value() const {
    float m = 0.0f;
    for (float v : data_) {
        m = std::max(m, v);
    }
    return m;
}

double Volume::total_mass() const {
    double s = 0.0;
    for (float v : data_) {
        s += v;
    }
    return s;
}

Vec3 Volume::centroid_mm() const {
    Vec3 acc = Vec3::Zero();
    double mass = 0.0;
    for (int k = 0; k < dims_[2]; ++k) {
        for (int j = 0; j < dims_[1]; ++j) {
            for (int i = 0; i < dims_[0]; ++i) {
                const double w = at(i, j, k);
                if (w != 0.0) {
                    acc += w * voxel_center(i, j, k);
                    mass += w;
                }
            }
        }
    }
    return mass > 0.0 ? Vec3(acc / mass) : Vec3::Zero();
}

double trilinear_sample(const Volume& v, const Vec3& x_mm) {
    const auto& d = v.dims();
    const Vec3 idx = (x_mm - v.origin_mm()) / v.spacing_mm();
    for (int a = 0; a < 3; ++a) {
        if (!(idx[a] > -1.0 && idx[a] < d[a])) {
            return 0.0;
        }
    }
    const int i0 = static_cast<int>(std::floor(idx[0]));
    const int j0 = static_cast<int>(std::floor(idx[1]));
    const int k0 = static_cast<int>(std::floor(idx[2]));
    const double fx = idx[0] - i0;
    const double fy = idx[1] - j0;
    const double fz = idx[2] - k0;

    auto val = [&](int i, int j, int k) -> double {
        if (i < 0 || j < 0 || k < 0 || i >= d[0] || j >= d[1] || k >= d[2]) {
            return 0.0;
        }
        return v.at(i, j, k);
    };

    const double c00 = val(i0, j0, k0) * (1 - fx) + val(i0 + 1, j0, k0) * fx;
    const double c10 = val(i0, j0 + 1, k0) * (1 - fx) + val(i0 + 1, j0 + 1, k0) * fx;
    const double c01 = val(i0, j0, k0 + 1) * (1 - fx) + val(i0 + 1, j0, k0 + 1) * fx;
    const double c11 = val(i0, j0 + 1, k0 + 1) * (1 - fx) + val(i0 + 1, j0 + 1, k0 + 1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

// ---------------------------------------------------------------------------
// Phantoms

std::string to_string(PhantomKind kind) {
    switch (kind) {
        case PhantomKind::shell_pair:
            return "shell_pair";
        case PhantomKind::wing_plate:
            return "wing_plate";
        case PhantomKind::noise_blobs:
            return "noise_blobs";
    }
    return "unknown";
}

PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "shell_pair") {
        return PhantomKind::shell_pair;
    }
    if (s == "wing_plate") {
        return PhantomKind::wing_plate;
    }
    if (s == "noise_blobs") {
        return PhantomKind::noise_blobs;
    }
    throw std::invalid_argument("unknown phantom kind '" + s + "'");
}

namespace {

enum class Shape { shell, box, torus, blob };

// One solid primitive. Sizes are in millimeters; the local frame is
// world = rotation * local + center.
struct Primitive {
    Shape shape;
    Vec3 center;
    Vec3 size;        // radii for shell, half extents for box, (R, r, -) for torus, (sigma) for blob
    double thickness; // shell wall thickness
    Mat3 rotation;
    double intensity;
};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Occupancy in [0, 1] with a linear ramp one edge-width wide across the surface.
double occupancy(const Primitive& p, const Vec3& world, double edge) {
    const Vec3 q = p.rotation.transpose() * (world - p.center);
    switch (p.shape) {
        case Shape::shell: {
            const Vec3 s = q.cwiseQuotient(p.size);
            const double r = s.norm();
            const Vec3 grad = q.cwiseQuotient(p.size.cwiseProduct(p.size));
            const double gn = grad.norm();
            if (gn == 0.0) {
                return 0.0;
            }
            const double dist = (r - 1.0) * r / gn;
            return clamp01(0.5 - (std::abs(dist) - 0.5 * p.thickness) / edge);
        }
        case Shape::box: {
            const Vec3 e = q.cwiseAbs() - p.size;
            const double outside = e.cwiseMax(0.0).norm();
            const double inside = std::min(e.maxCoeff(), 0.0);
            return clamp01(0.5 - (outside + inside) / edge);
        }
        case Shape::torus: {
            const double ring = std::hypot(q[0], q[1]) - p.size[0];
            const double dist = std::hypot(ring, q[2]) - p.size[1];
            return clamp01(0.5 - dist / edge);
        }
        case Shape::blob: {
            const double sigma = p.size[0];
            const double r2 = q.squaredNorm() / (sigma * sigma);
            return r2 > 16.0 ? 0.0 : std::exp(-0.5 * r2);
        }
    }
    return 0.0;
}

class Jitter {
public:
    explicit Jitter(std::uint64_t seed) : rng_(derive_seed(seed, "phantom")) {}
    double around(double v, double rel) { return v * (1.0 + rng_.uniform(-rel, rel)); }
    double offset(double v, double abs) { return v + rng_.uniform(-abs, abs); }
    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

Primitive make(Shape shape, Vec3 center, Vec3 size, double thickness, Vec3 angles_deg,
               double intensity, double half, Jitter& jit) {
    Primitive p;
    p.shape = shape;
    p.center = Vec3(jit.offset(center[0], 0.04), jit.offset(center[1], 0.04),
                    jit.offset(center[2], 0.04)) *
               half;
    p.size = Vec3(jit.around(size[0], 0.1), jit.around(size[1], 0.1), jit.around(size[2], 0.1)) *
             half;
    p.thickness = thickness * half;
    p.rotation = euler_to_rotation(jit.offset(angles_deg[0], 8.0), jit.offset(angles_deg[1], 8.0),
                                   jit.offset(angles_deg[2], 8.0));
    p.intensity = jit.around(intensity, 0.15);
    return p;
}

// Layouts are expressed in units of the volume half-extent so that the same
// anatomy appears at every grid resolution.
std::vector<Primitive> layout(const PhantomSpec& spec, double half) {
    Jitter jit(spec.seed);
    std::vector<Primitive> out;
    switch (spec.kind) {
        case PhantomKind::shell_pair:
            out.push_back(make(Shape::shell, {-0.32, 0.05, 0.02}, {0.26, 0.36, 0.18}, 0.06,
                               {15, -10, 20}, 1.0, half, jit));
            out.push_back(make(Shape::shell, {0.30, 0.0, -0.05}, {0.22, 0.30, 0.20}, 0.07,
                               {-5, 25, -15}, 0.8, half, jit));
            out.push_back(make(Shape::box, {-0.55, -0.2, 0.0}, {0.04, 0.18, 0.12}, 0.0,
                               {0, 0, 25}, 1.2, half, jit));
            out.push_back(make(Shape::box, {0.50, 0.25, 0.1}, {0.05, 0.12, 0.15}, 0.0,
                               {10, 0, -35}, 0.9, half, jit));
            out.push_back(make(Shape::box, {0.02, 0.30, -0.15}, {0.06, 0.20, 0.06}, 0.0,
                               {30, 0, 5}, 1.5, half, jit));
            out.push_back(make(Shape::blob, {0.15, -0.35, 0.2}, {0.06, 0.06, 0.06}, 0.0,
                               {0, 0, 0}, 2.0, half, jit));
            break;
        case PhantomKind::wing_plate:
            out.push_back(make(Shape::torus, {0.0, -0.1, 0.05}, {0.28, 0.06, 0.0}, 0.0,
                               {70, 10, 0}, 1.0, half, jit));
            out.push_back(make(Shape::box, {-0.42, 0.15, 0.0}, {0.20, 0.22, 0.03}, 0.0,
                               {10, 35, 15}, 0.9, half, jit));
            out.push_back(make(Shape::box, {0.38, 0.22, 0.05}, {0.16, 0.26, 0.035}, 0.0,
                               {-15, -30, -10}, 1.1, half, jit));
            out.push_back(make(Shape::shell, {0.05, 0.35, -0.1}, {0.12, 0.16, 0.10}, 0.05,
                               {0, 20, 40}, 1.3, half, jit));
            out.push_back(make(Shape::blob, {-0.2, -0.4, 0.15}, {0.07, 0.07, 0.07}, 0.0,
                               {0, 0, 0}, 1.8, half, jit));
            break;
        case PhantomKind::noise_blobs: {
            Rng& rng = jit.rng();
            for (int b = 0; b < 14; ++b) {
                Primitive p;
                p.shape = Shape::blob;
                p.center = Vec3(rng.uniform(-0.55, 0.55), rng.uniform(-0.55, 0.55),
                                rng.uniform(-0.4, 0.4)) *
                           half;
                const double sigma = rng.uniform(0.05, 0.14) * half;
                p.size = Vec3(sigma, sigma, sigma);
                p.thickness = 0.0;
                p.rotation = Mat3::Identity();
                p.intensity = rng.uniform(0.5, 1.5);
                out.push_back(p);
            }
            out.push_back(make(Shape::box, {0.1, -0.3, 0.0}, {0.35, 0.04, 0.05}, 0.0,
                               {0, 10, 20}, 1.0, half, jit));
            break;
        }
    }
    return out;
}

void rasterize(Volume& v, const std::vector<Primitive>& prims, double scale) {
    const auto d = v.dims();
    const double edge = v.spacing_mm();
    parallel_for(static_cast<std::size_t>(d[2]), [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                const Vec3 x = v.voxel_center(i, j, k);
                double value = 0.0;
                for (const auto& p : prims) {
                    value += p.intensity * occupancy(p, x, edge);
                }
                v.at(i, j, k) = static_cast<float>(scale * value);
            }
        }
    });
}

}  // namespace

Volume make_phantom(std::array<int, 3> dims, double spacing_mm, const PhantomSpec& spec) {
    for (int dd : dims) {
        if (dd < 16) {
            throw std::invalid_argument("make_phantom: dims must be >= 16 per axis");
        }
    }
    if (!(spacing_mm > 0.0)) {
        throw std::invalid_argument("make_phantom: spacing must be positive");
    }
    if (!(spec.intensity_scale > 0.0)) {
        throw std::invalid_argument("make_phantom: intensity_scale must be positive");
    }
    const double half = spacing_mm * (*std::min_element(dims.begin(), dims.end()) - 1) / 2.0;
    auto prims = layout(spec, half);

    Volume v(dims, spacing_mm);
    rasterize(v, prims, spec.intensity_scale);
    // Recenter the anatomy on the iso-center and redraw.
    const Vec3 c = v.centroid_mm();
    for (auto& p : prims) {
        p.center -= c;
    }
    rasterize(v, prims, spec.intensity_scale);
    return v;
}

void save_volume(const Volume& v, const std::filesystem::path& base) {
    grid_io::write(base, v.dims(), v.spacing_mm(), v.data());
}

Volume load_volume(const std::filesystem::path& base) {
    auto g = grid_io::read(base);
    try {
        return Volume(g.dims, g.spacing_mm, std::move(g.data));
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("invalid volume in ") + base.string() + ": " + e.what());
    }
}

}  // namespace poseinit
