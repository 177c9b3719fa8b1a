#include "poseinit/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "poseinit/rng.hpp"

namespace poseinit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

PoseParams PoseParams::from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

std::array<double, 6> PoseParams::to_array() const {
    return {rx_deg, ry_deg, rz_deg, tx_mm, ty_mm, tz_mm};
}

bool PoseParams::is_finite() const {
    for (double v : to_array()) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void CameraGeometry::validate() const {
    if (!(source_to_iso_mm > 0.0 && source_to_iso_mm < source_to_detector_mm)) {
        throw std::invalid_argument("camera: require 0 < source_to_iso_mm < source_to_detector_mm");
    }
    if (detector_rows < 2 || detector_cols < 2) {
        throw std::invalid_argument("camera: detector must be at least 2x2 pixels");
    }
    if (!(pixel_spacing_mm > 0.0)) {
        throw std::invalid_argument("camera: pixel_spacing_mm must be positive");
    }
}

void PoseRange::validate() const {
    if (!(rot_min_deg < rot_max_deg) || !(trans_min_mm < trans_max_mm)) {
        throw std::invalid_argument("pose range: min must be below max");
    }
}

bool PoseRange::contains(const PoseParams& p) const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    return in(p.rx_deg, rot_min_deg, rot_max_deg) && in(p.ry_deg, rot_min_deg, rot_max_deg) &&
           in(p.rz_deg, rot_min_deg, rot_max_deg) && in(p.tx_mm, trans_min_mm, trans_max_mm) &&
           in(p.ty_mm, trans_min_mm, trans_max_mm) && in(p.tz_mm, trans_min_mm, trans_max_mm);
}

double wrap_degrees(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return w - 180.0;
}

Mat3 euler_to_rotation(double rx_deg, double ry_deg, double rz_deg) {
    if (!std::isfinite(rx_deg) || !std::isfinite(ry_deg) || !std::isfinite(rz_deg)) {
        throw std::invalid_argument("euler_to_rotation: non-finite angle");
    }
    const double ax = rx_deg * kDegToRad;
    const double ay = ry_deg * kDegToRad;
    const double az = rz_deg * kDegToRad;
    const double cx = std::cos(ax), sx = std::sin(ax);
    const double cy = std::cos(ay), sy = std::sin(ay);
    const double cz = std::cos(az), sz = std::sin(az);

    Mat3 rx;
    rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
    Mat3 ry;
    ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
    Mat3 rz;
    rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
    return rz * ry * rx;
}

RigidTransform pose_to_transform(const PoseParams& p) {
    return {euler_to_rotation(p.rx_deg, p.ry_deg, p.rz_deg), Vec3(p.tx_mm, p.ty_mm, p.tz_mm)};
}

RigidTransform transform_inverse(const RigidTransform& t) {
    const Mat3 rt = t.rotation.transpose();
    return {rt, -(rt * t.translation)};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Vec3 apply_transform(const RigidTransform& t, const Vec3& x) {
    return t.rotation * x + t.translation;
}

PoseParams sample_pose(const PoseRange& range, Rng& rng) {
    range.validate();
    PoseParams p;
    p.rx_deg = rng.uniform(range.rot_min_deg, range.rot_max_deg);
    p.ry_deg = rng.uniform(range.rot_min_deg, range.rot_max_deg);
    p.rz_deg = rng.uniform(range.rot_min_deg, range.rot_max_deg);
    p.tx_mm = rng.uniform(range.trans_min_mm, range.trans_max_mm);
    p.ty_mm = rng.uniform(range.trans_min_mm, range.trans_max_mm);
    p.tz_mm = rng.uniform(range.trans_min_mm, range.trans_max_mm);
    return p;
}

void to_json(nlohmann::json& j, const PoseParams& p) {
    j = nlohmann::json{{"rx_deg", p.rx_deg}, {"ry_deg", p.ry_deg}, {"rz_deg", p.rz_deg},
                       {"tx_mm", p.tx_mm},   {"ty_mm", p.ty_mm},   {"tz_mm", p.tz_mm}};
}

void from_json(const nlohmann::json& j, PoseParams& p) {
    j.at("rx_deg").get_to(p.rx_deg);
    j.at("ry_deg").get_to(p.ry_deg);
    j.at("rz_deg").get_to(p.rz_deg);
    j.at("tx_mm").get_to(p.tx_mm);
    j.at("ty_mm").get_to(p.ty_mm);
    j.at("tz_mm").get_to(p.tz_mm);
}

void to_json(nlohmann::json& j, const CameraGeometry& c) {
    j = nlohmann::json{{"source_to_detector_mm", c.source_to_detector_mm},
                       {"source_to_iso_mm", c.source_to_iso_mm},
                       {"detector_rows", c.detector_rows},
                       {"detector_cols", c.detector_cols},
                       {"pixel_spacing_mm", c.pixel_spacing_mm}};
}

void from_json(const nlohmann::json& j, CameraGeometry& c) {
    c = CameraGeometry{};
    c.source_to_detector_mm = j.value("source_to_detector_mm", c.source_to_detector_mm);
    c.source_to_iso_mm = j.value("source_to_iso_mm", c.source_to_iso_mm);
    c.detector_rows = j.value("detector_rows", c.detector_rows);
    c.detector_cols = j.value("detector_cols", c.detector_cols);
    c.pixel_spacing_mm = j.value("pixel_spacing_mm", c.pixel_spacing_mm);
}

void to_json(nlohmann::json& j, const PoseRange& r) {
    j = nlohmann::json{{"rot_min_deg", r.rot_min_deg},
                       {"rot_max_deg", r.rot_max_deg},
                       {"trans_min_mm", r.trans_min_mm},
                       {"trans_max_mm", r.trans_max_mm}};
}

void from_json(const nlohmann::json& j, PoseRange& r) {
    j.at("rot_min_deg").get_to(r.rot_min_deg);
    j.at("rot_max_deg").get_to(r.rot_max_deg);
    j.at("trans_min_mm").get_to(r.trans_min_mm);
    j.at("trans_max_mm").get_to(r.trans_max_mm);
}

}  // namespace poseinit
