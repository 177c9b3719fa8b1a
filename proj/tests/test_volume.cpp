#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "poseinit/errors.hpp"
#include "poseinit/grid_io.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/similarity.hpp"
#include "poseinit/volume.hpp"
#include "support.hpp"

using namespace poseinit;
namespace fs = std::filesystem;

TEST_CASE("volume is centered on the origin") {
    Volume v({4, 6, 8}, 2.0);
    CHECK(v.origin_mm().isApprox(Vec3(-3, -5, -7)));
    CHECK(v.voxel_center(3, 5, 7).isApprox(Vec3(3, 5, 7)));
    CHECK(v.index(1, 2, 3) == 1 + 4 * (2 + 6 * 3));
}

TEST_CASE("volume invariants") {
    CHECK_THROWS_AS(Volume({1, 4, 4}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Volume({4, 4, 4}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Volume({2, 2, 2}, 1.0, std::vector<float>(7, 0.0f)), std::invalid_argument);
    CHECK_THROWS_AS(Volume({2, 2, 2}, 1.0, std::vector<float>(8, -1.0f)), std::invalid_argument);
}

TEST_CASE("trilinear sample at centers, midpoints and outside") {
    Volume v({3, 3, 3}, 1.5);
    v.at(1, 1, 1) = 4.0f;
    v.at(2, 1, 1) = 8.0f;
    CHECK(trilinear_sample(v, v.voxel_center(1, 1, 1)) == doctest::Approx(4.0));
    CHECK(trilinear_sample(v, v.voxel_center(2, 1, 1)) == doctest::Approx(8.0));
    const Vec3 mid = 0.5 * (v.voxel_center(1, 1, 1) + v.voxel_center(2, 1, 1));
    CHECK(trilinear_sample(v, mid) == doctest::Approx(6.0));
    CHECK(trilinear_sample(v, Vec3(100, 0, 0)) == 0.0);
    // Zero padding: half a voxel past the last center the value is halved.
    CHECK(trilinear_sample(v, v.voxel_center(2, 1, 1) + Vec3(0.75, 0, 0)) ==
          doctest::Approx(4.0));
    CHECK(trilinear_sample(v, v.voxel_center(2, 1, 1) + Vec3(1.5, 0, 0)) == 0.0);
}

TEST_CASE("trilinear sample reproduces a linear field") {
    Volume v({10, 12, 14}, 1.7);
    const double a = 0.3, b = 1.1, c = 0.7;
    for (int k = 0; k < 14; ++k)
        for (int j = 0; j < 12; ++j)
            for (int i = 0; i < 10; ++i) v.at(i, j, k) = static_cast<float>(a * i + b * j + c * k);
    Rng rng(4);
    for (int n = 0; n < 500; ++n) {
        const double fi = rng.uniform(0, 9), fj = rng.uniform(0, 11), fk = rng.uniform(0, 13);
        const Vec3 x = v.origin_mm() + v.spacing_mm() * Vec3(fi, fj, fk);
        REQUIRE(std::abs(trilinear_sample(v, x) - (a * fi + b * fj + c * fk)) < 1e-5);
    }
}

TEST_CASE("trilinear sample is continuous") {
    const Volume& v = testing::desk_phantom();
    const double bound = 1e-3 * v.max_value();
    Rng rng(8);
    const double r = v.bounding_radius_mm();
    for (int n = 0; n < 1000; ++n) {
        const Vec3 x(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r));
        Vec3 d(rng.normal(), rng.normal(), rng.normal());
        d *= 1e-6 / d.norm();
        REQUIRE(std::abs(trilinear_sample(v, x + d) - trilinear_sample(v, x)) < bound);
    }
}

TEST_CASE("phantom determinism and validation") {
    for (auto kind : {PhantomKind::shell_pair, PhantomKind::wing_plate, PhantomKind::noise_blobs}) {
        const PhantomSpec spec{kind, 17, 1.0};
        CHECK(make_phantom({24, 24, 24}, 8.0, spec) == make_phantom({24, 24, 24}, 8.0, spec));
        CHECK(phantom_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_FALSE(make_phantom({24, 24, 24}, 8.0, {PhantomKind::shell_pair, 1, 1.0}) ==
                make_phantom({24, 24, 24}, 8.0, {PhantomKind::shell_pair, 2, 1.0}));
    CHECK_THROWS_AS(make_phantom({8, 32, 32}, 2.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(make_phantom({32, 32, 32}, 2.0, {PhantomKind::shell_pair, 1, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(phantom_kind_from_string("sphere"), std::invalid_argument);
}

TEST_CASE("shell_pair phantom has mass near the center") {
    const Volume v = make_phantom({128, 128, 128}, 2.0, {});
    CHECK(v.total_mass() > 0.0);
    CHECK(v.centroid_mm().norm() < 5.0 * v.spacing_mm());
}

TEST_CASE("phantom projections break rotational symmetry") {
    const auto cam = testing::desk_camera();
    const auto cfg = testing::desk_projection();
    for (auto kind : {PhantomKind::shell_pair, PhantomKind::wing_plate, PhantomKind::noise_blobs}) {
        const Volume v = make_phantom({64, 64, 64}, 4.0, {kind, 1, 1.0});
        const auto a = render_drr(v, {}, cam, cfg);
        for (int axis = 0; axis < 3; ++axis) {
            std::array<double, 6> p{};
            p[axis] = 10.0;
            const auto b = render_drr(v, PoseParams::from_array(p), cam, cfg);
            CHECK(ncc(a, b) < 0.999);
        }
    }
}

TEST_CASE("volume save/load round trip and error paths") {
    const auto dir = testing::scratch_dir("volume");
    const Volume v = make_phantom({20, 18, 16}, 3.0, {PhantomKind::wing_plate, 5, 2.0});
    save_volume(v, dir / "v");
    CHECK(fs::exists(dir / "v.json"));
    CHECK(fs::file_size(dir / "v.raw") == 20u * 18u * 16u * 4u);
    CHECK(load_volume(dir / "v") == v);
    CHECK(load_volume(dir / "v.json") == v);

    fs::resize_file(dir / "v.raw", fs::file_size(dir / "v.raw") - 4);
    CHECK_THROWS_AS(load_volume(dir / "v"), IoError);
    try {
        load_volume(dir / "v");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("size mismatch") != std::string::npos);
    }

    std::ofstream(dir / "bad.json") << "{\"dims\": [2, 2], \"spacing_mm\": 1}";
    std::ofstream(dir / "bad.raw") << "";
    CHECK_THROWS_AS(load_volume(dir / "bad"), IoError);
    CHECK_THROWS_AS(load_volume(dir / "missing"), IoError);
}

TEST_CASE("payload size for a 128^3 header") {
    const auto dir = testing::scratch_dir("volume128");
    const Volume v({128, 128, 128}, 2.0);
    save_volume(v, dir / "big");
    CHECK(fs::file_size(dir / "big.raw") == 8388608u);
    const auto g = grid_io::read(dir / "big");
    CHECK(g.dims == std::array<int, 3>{128, 128, 128});
    CHECK(g.spacing_mm == 2.0);
}

TEST_CASE("raw payload is little-endian float32 in x-fastest order") {
    const auto dir = testing::scratch_dir("volume_le");
    Volume v({2, 2, 2}, 1.0);
    v.at(1, 0, 0) = 1.0f;
    save_volume(v, dir / "le");
    std::ifstream in(dir / "le.raw", std::ios::binary);
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    // 1.0f == 0x3f800000, stored as 00 00 80 3f at element index 1.
    CHECK(b[4] == 0x00);
    CHECK(b[5] == 0x00);
    CHECK(b[6] == 0x80);
    CHECK(b[7] == 0x3f);
}
