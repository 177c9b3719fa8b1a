#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "poseinit/geometry.hpp"
#include "poseinit/rng.hpp"
#include "support.hpp"

using namespace poseinit;

namespace {

// Long-double elementary rotations, multiplied out independently of Eigen.
using LMat = std::array<std::array<long double, 3>, 3>;

LMat lmul(const LMat& a, const LMat& b) {
    LMat c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

LMat lrot(int axis, long double deg) {
    const long double r = deg * std::numbers::pi_v<long double> / 180.0L;
    const long double c = std::cos(r), s = std::sin(r);
    switch (axis) {
        case 0:
            return LMat{{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
        case 1:
            return LMat{{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
        default:
            return LMat{{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
    }
}

PoseParams random_pose(Rng& rng) { return sample_pose(PoseRange{-180, 180, -100, 100}, rng); }

}  // namespace

TEST_CASE("euler_to_rotation fixed values") {
    CHECK(testing::max_abs_diff(euler_to_rotation(0, 0, 0), Mat3::Identity()) == 0.0);

    Mat3 qx;
    qx << 1, 0, 0, 0, 0, -1, 0, 1, 0;
    CHECK(testing::max_abs_diff(euler_to_rotation(90, 0, 0), qx) < 1e-15);

    const Mat3 m = euler_to_rotation(10, 20, 30);
    const LMat ref = lmul(lrot(2, 30), lmul(lrot(1, 20), lrot(0, 10)));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(m(i, j) - static_cast<double>(ref[i][j])) < 1e-12);
    CHECK(testing::max_abs_diff(m * m.transpose(), Mat3::Identity()) < 1e-12);
}

TEST_CASE("euler_to_rotation rejects non-finite input") {
    CHECK_THROWS_AS(euler_to_rotation(std::nan(""), 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(euler_to_rotation(0, std::numeric_limits<double>::infinity(), 0),
                    std::invalid_argument);
}

TEST_CASE("rotation matrices are orthonormal with unit determinant") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto p = sample_pose(PoseRange{-1000, 1000, -1, 1}, rng);
        const Mat3 r = euler_to_rotation(p.rx_deg, p.ry_deg, p.rz_deg);
        REQUIRE(testing::max_abs_diff(r.transpose() * r, Mat3::Identity()) < 1e-9);
        REQUIRE(std::abs(r.determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("pose_to_transform") {
    const auto id = pose_to_transform({});
    CHECK(testing::max_abs_diff(id.rotation, Mat3::Identity()) == 0.0);
    CHECK(id.translation.norm() == 0.0);

    const auto t = pose_to_transform({0, 0, 0, 5, -3, 7});
    CHECK(testing::max_abs_diff(t.rotation, Mat3::Identity()) == 0.0);
    CHECK(t.translation == Vec3(5, -3, 7));

    const auto g = pose_to_transform({10, 20, 30, 1, 2, 3});
    CHECK((apply_transform(g, Vec3::Zero()) - Vec3(1, 2, 3)).norm() < 1e-15);
}

TEST_CASE("transform_inverse and compose") {
    const auto id = transform_inverse(RigidTransform::identity());
    CHECK(testing::max_abs_diff(id.rotation, Mat3::Identity()) == 0.0);
    CHECK(id.translation.norm() == 0.0);

    RigidTransform tr;
    tr.translation = Vec3(1, 2, 3);
    CHECK((transform_inverse(tr).translation - Vec3(-1, -2, -3)).norm() == 0.0);

    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto t = pose_to_transform(random_pose(rng));
        const auto c = compose(t, transform_inverse(t));
        REQUIRE(testing::max_abs_diff(c.rotation, Mat3::Identity()) < 1e-9);
        REQUIRE(c.translation.norm() < 1e-9);
        const Vec3 x(rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200));
        REQUIRE((apply_transform(transform_inverse(t), apply_transform(t, x)) - x).norm() < 1e-9);
    }
}

TEST_CASE("compose applies the right operand first") {
    const auto a = pose_to_transform({0, 0, 90, 0, 0, 0});
    const auto b = pose_to_transform({0, 0, 0, 1, 0, 0});
    // b moves (0,0,0) to (1,0,0); a turns that into (0,1,0).
    CHECK((apply_transform(compose(a, b), Vec3::Zero()) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("apply_transform") {
    CHECK(apply_transform(RigidTransform::identity(), Vec3(4, 5, 6)) == Vec3(4, 5, 6));
    const auto rz = pose_to_transform({0, 0, 90, 0, 0, 0});
    CHECK((apply_transform(rz, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-15);

    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const auto t = pose_to_transform(random_pose(rng));
        const Vec3 x(rng.uniform(-300, 300), rng.uniform(-300, 300), rng.uniform(-300, 300));
        const Vec3 y(rng.uniform(-300, 300), rng.uniform(-300, 300), rng.uniform(-300, 300));
        const double d = (apply_transform(t, x) - apply_transform(t, y)).norm();
        REQUIRE(std::abs(d - (x - y).norm()) < 1e-9);
    }
}

TEST_CASE("sample_pose respects both ranges") {
    Rng rng(3);
    for (const auto& r : {PoseRange::standard(), PoseRange::extended()}) {
        for (int i = 0; i < 2000; ++i) {
            const auto p = sample_pose(r, rng);
            REQUIRE(r.contains(p));
        }
    }
    CHECK(PoseRange::standard().rot_max_deg == 20.0);
    CHECK(PoseRange::standard().trans_max_mm == 30.0);
    CHECK(PoseRange::extended().rot_min_deg == -45.0);
    CHECK(PoseRange::extended().trans_min_mm == -50.0);
}

TEST_CASE("sample_pose is uniform around the midpoint") {
    const PoseRange r = PoseRange::extended();
    Rng rng(99);
    const int n = 10000;
    std::array<double, 6> sum{};
    for (int i = 0; i < n; ++i) {
        const auto a = sample_pose(r, rng).to_array();
        for (int k = 0; k < 6; ++k) sum[k] += a[k];
    }
    for (int k = 0; k < 6; ++k) {
        const double width = k < 3 ? r.rot_max_deg - r.rot_min_deg : r.trans_max_mm - r.trans_min_mm;
        const double mid = k < 3 ? 0.5 * (r.rot_max_deg + r.rot_min_deg)
                                 : 0.5 * (r.trans_max_mm + r.trans_min_mm);
        const double se = width / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(sum[k] / n - mid) < 3.0 * se);
    }
}

TEST_CASE("sample_pose is reproducible") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) REQUIRE(sample_pose({}, a) == sample_pose({}, b));
}

TEST_CASE("validation") {
    CameraGeometry c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.magnification() == doctest::Approx(1.275));
    c.source_to_iso_mm = 1020;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.detector_rows = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.pixel_spacing_mm = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    CHECK_THROWS_AS((PoseRange{5, 5, -1, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((PoseRange{-1, 1, 2, -2}.validate()), std::invalid_argument);
}

TEST_CASE("wrap_degrees maps into [-180, 180)") {
    CHECK(wrap_degrees(350.0) == doctest::Approx(-10.0));
    CHECK(wrap_degrees(180.0) == doctest::Approx(-180.0));
    CHECK(wrap_degrees(-180.0) == doctest::Approx(-180.0));
    CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
    CHECK(wrap_degrees(12.5) == 12.5);
}

TEST_CASE("json field names") {
    const PoseParams p{1, 2, 3, 4, 5, 6};
    const nlohmann::json j = p;
    CHECK(j.at("rx_deg") == 1.0);
    CHECK(j.at("tz_mm") == 6.0);
    CHECK(j.get<PoseParams>() == p);

    const nlohmann::json jc = CameraGeometry{};
    for (const char* k : {"source_to_detector_mm", "source_to_iso_mm", "detector_rows",
                          "detector_cols", "pixel_spacing_mm"})
        CHECK(jc.contains(k));
    CHECK(jc.at("pixel_spacing_mm") == 2.176);
}
