#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>
#include <json.hpp>

namespace poseinit {

class Rng;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Six-parameter rigid pose. Angles in degrees, translations in millimeters.
struct PoseParams {
    double rx_deg = 0.0;
    double ry_deg = 0.0;
    double rz_deg = 0.0;
    double tx_mm = 0.0;
    double ty_mm = 0.0;
    double tz_mm = 0.0;

    static PoseParams from_array(const std::array<double, 6>& a);
    std::array<double, 6> to_array() const;
    bool is_finite() const;

    bool operator==(const PoseParams&) const = default;
};

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
};

/// Cone-beam C-arm geometry. The source sits on the negative z-axis, the
/// detector plane is perpendicular to z, and the iso-center is the world origin.
struct CameraGeometry {
    double source_to_detector_mm = 1020.0;
    double source_to_iso_mm = 800.0;
    int detector_rows = 128;
    int detector_cols = 128;
    double pixel_spacing_mm = 2.176;

    void validate() const;
    double magnification() const { return source_to_detector_mm / source_to_iso_mm; }
};

struct PoseRange {
    double rot_min_deg = -20.0;
    double rot_max_deg = 20.0;
    double trans_min_mm = -30.0;
    double trans_max_mm = 30.0;

    void validate() const;
    bool contains(const PoseParams& p) const;

    /// [-20, 20] deg, [-30, 30] mm.
    static PoseRange standard() { return {}; }
    /// [-45, 45] deg, [-50, 50] mm.
    static PoseRange extended() { return {-45.0, 45.0, -50.0, 50.0}; }
};

/// Wraps an angle in degrees to [-180, 180).
double wrap_degrees(double deg);

/// R = Rz(rz) * Ry(ry) * Rx(rx): extrinsic rotations about x, then y, then z.
Mat3 euler_to_rotation(double rx_deg, double ry_deg, double rz_deg);

RigidTransform pose_to_transform(const PoseParams& p);
RigidTransform transform_inverse(const RigidTransform& t);
/// compose(a, b) applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
Vec3 apply_transform(const RigidTransform& t, const Vec3& x);

PoseParams sample_pose(const PoseRange& range, Rng& rng);

void to_json(nlohmann::json& j, const PoseParams& p);
void from_json(const nlohmann::json& j, PoseParams& p);
void to_json(nlohmann::json& j, const CameraGeometry& c);
void from_json(const nlohmann::json& j, CameraGeometry& c);
void to_json(nlohmann::json& j, const PoseRange& r);
void from_json(const nlohmann::json& j, PoseRange& r);

}  // namespace poseinit
