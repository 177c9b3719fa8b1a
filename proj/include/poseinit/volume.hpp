#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poseinit/geometry.hpp"

namespace poseinit {

/// Isotropic scalar grid centered on the world origin. Voxel (i, j, k) has its
/// center at origin + spacing * (i, j, k); data is stored x-fastest.
class Volume {
public:
    Volume() = default;
    /// Zero-filled volume centered on the origin.
    Volume(std::array<int, 3> dims, double spacing_mm);
    Volume(std::array<int, 3> dims, double spacing_mm, std::vector<float> data);

    const std::array<int, 3>& dims() const { return dims_; }
    double spacing_mm() const { return spacing_; }
    const Vec3& origin_mm() const { return origin_; }
    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
    }
    float at(int i, int j, int k) const { return data_[index(i, j, k)]; }
    float& at(int i, int j, int k) { return data_[index(i, j, k)]; }

    Vec3 voxel_center(int i, int j, int k) const {
        return origin_ + spacing_ * Vec3(i, j, k);
    }

    /// Radius of the sphere around the origin that contains every point with a
    /// non-zero trilinear sample (the grid plus its one-voxel zero-padding band).
    double bounding_radius_mm() const;

    double max_value() const;
    double total_mass() const;
    /// Intensity-weighted centroid in world millimeters.
    Vec3 centroid_mm() const;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    bool operator==(const Volume& other) const = default;

private:
    std::array<int, 3> dims_{0, 0, 0};
    double spacing_ = 1.0;
    Vec3 origin_ = Vec3::Zero();
    std::vector<float> data_;
};

/// Trilinear interpolation with zero padding: voxels outside the grid read as
/// zero, so the field falls linearly to zero over the half-voxel band past
/// each face and is exactly zero beyond it.
double trilinear_sample(const Volume& v, const Vec3& x_mm);

enum class PhantomKind { shell_pair, wing_plate, noise_blobs };

struct PhantomSpec {
    PhantomKind kind = PhantomKind::shell_pair;
    std::uint64_t seed = 1;
    double intensity_scale = 1.0;
};

std::string to_string(PhantomKind kind);
PhantomKind phantom_kind_from_string(const std::string& s);

/// Deterministic, chirality-bearing synthetic anatomy. dims must be >= 16.
Volume make_phantom(std::array<int, 3> dims, double spacing_mm, const PhantomSpec& spec);

/// Writes <base>.json and <base>.raw. A trailing .json or .raw on the path is
/// ignored.
void save_volume(const Volume& v, const std::filesystem::path& base);
Volume load_volume(const std::filesystem::path& base);

}  // namespace poseinit
