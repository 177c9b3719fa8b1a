#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "poseinit/errors.hpp"
#include "poseinit/initializer.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/registration.hpp"
#include "support.hpp"

using namespace poseinit;
namespace fs = std::filesystem;

namespace {

const InitializerVariant kVariants[] = {InitializerVariant::target_only,
                                        InitializerVariant::two_image_pe,
                                        InitializerVariant::two_image_pe_ac};

std::vector<Volume> two_volumes() {
    return {make_phantom({32, 32, 32}, 8.0, {PhantomKind::shell_pair, 1, 1.0}),
            make_phantom({32, 32, 32}, 8.0, {PhantomKind::shell_pair, 2, 1.0})};
}

double rot_mae(const RegressorModel& m, const Dataset& ds) {
    double e = 0;
    for (const auto& s : ds.samples) {
        const auto p = predict_initial_pose(m, s.target_image, &ds.references[s.volume_id]);
        e += std::abs(p.rx_deg - s.theta_true.rx_deg) + std::abs(p.ry_deg - s.theta_true.ry_deg) +
             std::abs(p.rz_deg - s.theta_true.rz_deg);
    }
    return e / (3.0 * ds.samples.size());
}

}  // namespace

TEST_CASE("variant names and channel counts") {
    CHECK(input_channels(InitializerVariant::target_only) == 1);
    CHECK(input_channels(InitializerVariant::two_image_pe) == 6);
    CHECK(input_channels(InitializerVariant::two_image_pe_ac) == 8);
    CHECK(input_channels(InitializerVariant::two_image_pe, 2) == 10);
    for (auto v : kVariants) CHECK(initializer_variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(initializer_variant_from_string("resnet"), std::invalid_argument);
}

TEST_CASE("build_input layout") {
    const auto target = testing::random_image(128, 128, 1);
    const auto ref = testing::random_image(128, 128, 2);

    const auto t1 = build_input(InitializerVariant::target_only, target, nullptr);
    CHECK(t1.channels == 1);
    CHECK(t1.height == 128);
    CHECK(t1.width == 128);
    const auto n = normalized(target);
    CHECK(std::equal(n.data.begin(), n.data.end(), t1.data.begin()));

    const auto t8 = build_input(InitializerVariant::two_image_pe_ac, target, &ref);
    CHECK(t8.channels == 8);
    for (int r = 0; r < 128; ++r) {
        REQUIRE(t8.at(6, r, 0) == -1.0);
        REQUIRE(t8.at(6, r, 127) == 1.0);
    }
    for (int c = 0; c < 128; ++c) {
        REQUIRE(t8.at(7, 0, c) == -1.0);
        REQUIRE(t8.at(7, 127, c) == 1.0);
    }
    for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c) {
            const double su = t8.at(2, r, c), cu = t8.at(3, r, c);
            const double sv = t8.at(4, r, c), cv = t8.at(5, r, c);
            REQUIRE(std::abs(su * su + cu * cu - 1.0) < 1e-6);
            REQUIRE(std::abs(sv * sv + cv * cv - 1.0) < 1e-6);
            REQUIRE(std::abs(su - std::sin(M_PI * t8.at(6, r, c))) < 1e-12);
            REQUIRE(std::abs(cv - std::cos(M_PI * t8.at(7, r, c))) < 1e-12);
        }
    const auto nr = normalized(ref);
    CHECK(std::equal(nr.data.begin(), nr.data.end(), t8.data.begin() + 128 * 128));

    const auto t6 = build_input(InitializerVariant::two_image_pe, target, &ref);
    CHECK(t6.channels == 6);
    CHECK(std::equal(t6.data.begin(), t6.data.end(), t8.data.begin()));

    CHECK_THROWS_AS(build_input(InitializerVariant::two_image_pe, target, nullptr),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_input(InitializerVariant::target_only, target, &ref),
                    std::invalid_argument);
    const auto small = testing::random_image(64, 64, 3);
    CHECK_THROWS_AS(build_input(InitializerVariant::two_image_pe, target, &small),
                    std::invalid_argument);
}

TEST_CASE("pose normalization") {
    const PoseRange r = PoseRange::extended();
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto p = sample_pose(r, rng);
        const auto n = normalize_pose(p, r);
        for (double x : n) REQUIRE(std::abs(x) <= 1.0);
        const auto back = denormalize_pose(n, r).to_array();
        const auto a = p.to_array();
        for (int k = 0; k < 6; ++k) REQUIRE(std::abs(back[k] - a[k]) < 1e-12);
        auto neg = n;
        for (auto& x : neg) x = -x;
        const auto m = denormalize_pose(neg, r).to_array();
        for (int k = 0; k < 6; ++k) REQUIRE(m[k] == -back[k]);
    }
    const auto mid = denormalize_pose({}, PoseRange{0, 10, -4, 2}).to_array();
    CHECK(mid[0] == 5.0);
    CHECK(mid[5] == -1.0);
}

TEST_CASE("dataset generation") {
    const auto vols = two_volumes();
    const auto cam = testing::desk_camera();
    const auto cfg = testing::desk_projection();
    const auto ds = generate_dataset(vols, PoseRange::standard(), 10, 3, cam, cfg);
    REQUIRE(ds.samples.size() == 10u);
    int per[2] = {0, 0};
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(ds.samples[i].volume_id == static_cast<int>(i % 2));
        ++per[ds.samples[i].volume_id];
        CHECK(PoseRange::standard().contains(ds.samples[i].theta_true));
        CHECK(ds.samples[i].target_image ==
              render_drr(vols[i % 2], ds.samples[i].theta_true, cam, cfg));
    }
    CHECK(per[0] == 5);
    CHECK(per[1] == 5);
    CHECK(ds.references.size() == 2u);
    CHECK(ds.references[1] == render_drr(vols[1], {}, cam, cfg));

    const auto again = generate_dataset(vols, PoseRange::standard(), 10, 3, cam, cfg);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(again.samples[i].theta_true == ds.samples[i].theta_true);
        CHECK(again.samples[i].target_image == ds.samples[i].target_image);
    }
    const auto other = generate_dataset(vols, PoseRange::standard(), 10, 4, cam, cfg);
    CHECK_FALSE(other.samples[0].theta_true == ds.samples[0].theta_true);

    const std::vector<Volume> none;
    CHECK_THROWS_AS(generate_dataset(none, PoseRange::standard(), 10, 3, cam, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset(vols, PoseRange::standard(), 0, 3, cam, cfg),
                    std::invalid_argument);
}

TEST_CASE("dataset save and load") {
    const auto dir = testing::scratch_dir("dataset");
    const auto ds = generate_dataset(two_volumes(), PoseRange::extended(), 5, 8,
                                     testing::desk_camera(), testing::desk_projection());
    save_dataset(ds, dir / "ds");
    CHECK(fs::exists(dir / "ds" / "manifest.json"));
    CHECK(fs::exists(dir / "ds" / "sample_000004.raw"));
    CHECK(fs::exists(dir / "ds" / "reference_001.json"));
    const auto back = load_dataset(dir / "ds");
    REQUIRE(back.samples.size() == 5u);
    CHECK(back.range.rot_max_deg == 45.0);
    CHECK(back.seed == 8u);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back.samples[i].theta_true == ds.samples[i].theta_true);
        CHECK(back.samples[i].volume_id == ds.samples[i].volume_id);
        // Images pass through float32 storage.
        for (std::size_t k = 0; k < ds.samples[i].target_image.size(); ++k)
            REQUIRE(back.samples[i].target_image.data[k] ==
                    static_cast<float>(ds.samples[i].target_image.data[k]));
    }
    CHECK_THROWS_AS(load_dataset(dir / "nowhere"), IoError);
}

TEST_CASE("forward of untrained and trained models") {
    const PoseRange r = PoseRange::standard();
    auto m = make_model(InitializerVariant::target_only, r, 1);
    m.net.set_zero();
    const auto img = testing::random_image(32, 32, 5);
    CHECK(predict_initial_pose(m, img, nullptr) == PoseParams{});
    CHECK(forward(m, build_input(m.variant, img, nullptr)) == PoseParams{});

    auto off = make_model(InitializerVariant::target_only, PoseRange{10, 30, 0, 60}, 1);
    off.net.set_zero();
    CHECK(predict_initial_pose(off, img, nullptr) == PoseParams{20, 20, 20, 30, 30, 30});

    auto big = make_model(InitializerVariant::two_image_pe_ac, r, 2);
    for (auto& w : big.net.parameters()) w *= 30.0;
    const auto ref = testing::random_image(32, 32, 6);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto p = predict_initial_pose(big, testing::random_image(32, 32, 10 + s), &ref);
        REQUIRE(r.contains(p));
    }
    const auto p1 = predict_initial_pose(big, img, &ref);
    const auto p2 = predict_initial_pose(big, img, &ref);
    CHECK(p1 == p2);
    CHECK_THROWS_AS(forward(big, build_input(InitializerVariant::target_only, img, nullptr)),
                    std::invalid_argument);
}

TEST_CASE("batch loss gradient matches central differences") {
    const auto ds = generate_dataset(two_volumes(), PoseRange::standard(), 6, 9,
                                     testing::desk_camera(), testing::desk_projection());
    for (auto v : kVariants) {
        auto m = make_model(v, ds.range, 12);
        const std::vector<std::size_t> batch{0, 2, 3, 5};
        std::vector<double> grad(m.net.parameter_count(), 0.0);
        batch_loss(m, ds, batch, grad);
        Rng rng(13);
        auto params = m.net.parameters();
        for (int n = 0; n < 20; ++n) {
            const std::size_t i = rng.below(params.size());
            const double keep = params[i];
            const double h = 1e-6;
            params[i] = keep + h;
            const double lp = batch_loss(m, ds, batch);
            params[i] = keep - h;
            const double lm = batch_loss(m, ds, batch);
            params[i] = keep;
            const double fd = (lp - lm) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-7});
            INFO(to_string(v) << " weight " << i << " analytic " << grad[i] << " fd " << fd);
            CHECK(std::abs(fd - grad[i]) / scale < 1e-4);
        }
    }
}

TEST_CASE("training lowers the loss and is reproducible") {
    std::vector<Volume> vols{make_phantom({32, 32, 32}, 8.0, {PhantomKind::shell_pair, 1, 1.0})};
    const auto ds = generate_dataset(vols, PoseRange::standard(), 500, 14, testing::desk_camera(),
                                     testing::desk_projection());
    TrainingConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.01;
    cfg.seed = 3;
    auto a = make_model(InitializerVariant::target_only, ds.range, 5);
    set_thread_count(1);
    const auto rep = train(a, ds, cfg);
    REQUIRE(rep.epoch_loss.size() == 20u);
    CHECK(rep.epoch_loss.back() < rep.epoch_loss.front());

    cfg.epochs = 2;
    auto b = make_model(InitializerVariant::target_only, ds.range, 5);
    auto c = make_model(InitializerVariant::target_only, ds.range, 5);
    train(b, ds, cfg);
    set_thread_count(3);
    train(c, ds, cfg);
    set_thread_count(0);
    CHECK(std::equal(b.net.parameters().begin(), b.net.parameters().end(),
                     c.net.parameters().begin()));
}

TEST_CASE("every variant memorizes ten samples") {
    const auto ds = generate_dataset(two_volumes(), PoseRange::standard(), 10, 15,
                                     testing::desk_camera(), testing::desk_projection());
    TrainingConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 10;
    cfg.learning_rate = 0.03;
    for (auto v : kVariants) {
        auto m = make_model(v, ds.range, 16);
        train(m, ds, cfg);
        INFO(to_string(v));
        CHECK(rot_mae(m, ds) < 2.0);
    }
}

TEST_CASE("training rejects bad input and reports divergence") {
    TrainingConfig cfg;
    CHECK(cfg.epochs == 200);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.n_train_samples == 2000);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    std::vector<Volume> vols{make_phantom({32, 32, 32}, 8.0, {})};
    const auto ds = generate_dataset(vols, PoseRange::standard(), 4, 1, testing::desk_camera(),
                                     testing::desk_projection());
    auto m = make_model(InitializerVariant::target_only, ds.range, 1);
    TrainingConfig wild;
    wild.epochs = 3;
    wild.learning_rate = 1e300;
    CHECK_THROWS_AS(train(m, ds, wild), DivergedError);
    CHECK_THROWS_AS(train(m, Dataset{}, TrainingConfig{}), std::invalid_argument);
}

TEST_CASE("prediction is cheaper than one registration iteration") {
    const auto cam = testing::desk_camera();
    const auto cfg = testing::desk_projection();
    const Volume& v = testing::desk_phantom();
    const auto target = render_drr(v, {5, 5, 5, 5, 5, 5}, cam, cfg);
    const auto reference = render_drr(v, {}, cam, cfg);
    const auto m = make_model(InitializerVariant::two_image_pe_ac, PoseRange::standard(), 2);
    using clock = std::chrono::steady_clock;
    // Best of several trials keeps scheduler noise out of the comparison.
    double predict = 1e9, iteration = 1e9;
    for (int trial = 0; trial < 5; ++trial) {
        auto t0 = clock::now();
        predict_initial_pose(m, target, &reference);
        predict = std::min(predict, std::chrono::duration<double>(clock::now() - t0).count());
        t0 = clock::now();
        RegistrationProblem pb{target, v, cam, cfg, image_loss(SimilarityKind::grad_ncc)};
        loss_at({}, pb);
        gradient_fd({}, pb, {});
        iteration = std::min(iteration, std::chrono::duration<double>(clock::now() - t0).count());
    }
    CHECK(predict < iteration);
}

TEST_CASE("model file round trip and corruption") {
    const auto dir = testing::scratch_dir("model");
    auto m = make_model(InitializerVariant::two_image_pe, PoseRange::extended(), 77);
    save_model(m, dir / "m.bin", {{"note", "test"}});

    std::ifstream in(dir / "m.bin", std::ios::binary);
    std::string header;
    std::getline(in, header);
    const auto h = nlohmann::json::parse(header);
    CHECK(h.at("variant") == "two_image_pe");
    CHECK(h.at("in_channels") == 6);
    CHECK(h.at("parameter_count") == m.net.parameter_count());
    CHECK(h.at("layers").size() == 10u);
    CHECK(h.at("layers")[0].at("name") == "conv1.weight");
    CHECK(h.at("provenance").at("note") == "test");
    CHECK(fs::file_size(dir / "m.bin") == header.size() + 1 + 4 * m.net.parameter_count());

    const auto back = load_model(dir / "m.bin");
    CHECK(back.variant == m.variant);
    CHECK(back.seed == 77u);
    CHECK(back.range.rot_max_deg == 45.0);
    const auto a = m.net.parameters();
    const auto b = back.net.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(b[i] == static_cast<float>(a[i]));

    fs::copy_file(dir / "m.bin", dir / "short.bin");
    fs::resize_file(dir / "short.bin", fs::file_size(dir / "short.bin") - 4);
    CHECK_THROWS_AS(load_model(dir / "short.bin"), IoError);
    std::ofstream(dir / "junk.bin") << "{not json\n";
    CHECK_THROWS_AS(load_model(dir / "junk.bin"), IoError);
    CHECK_THROWS_AS(load_model(dir / "absent.bin"), IoError);
}
