#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "poseinit/config.hpp"
#include "poseinit/errors.hpp"
#include "support.hpp"

using namespace poseinit;

TEST_CASE("defaults validate and round trip") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.phantoms.kinds == std::vector<PhantomKind>{PhantomKind::shell_pair});
    CHECK(c.eval_methods.size() == 4u);
    const auto back = nlohmann::json(c).get<RunConfig>();
    CHECK(nlohmann::json(back) == nlohmann::json(c));
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16u);
    c.seed = 1;
    CHECK(config_hash(back) != config_hash(c));
}

TEST_CASE("partial files overlay defaults") {
    const auto dir = testing::scratch_dir("config");
    std::ofstream(dir / "c.json") << R"({"seed": 9, "eval_cases": 7,
        "phantoms": {"n_train": 3, "kinds": ["wing_plate", "noise_blobs"]},
        "optimizer": {"max_iters": 40}, "eval_methods": ["original"]})";
    const auto c = load_run_config(dir / "c.json");
    CHECK(c.seed == 9u);
    CHECK(c.eval_cases == 7);
    CHECK(c.phantoms.n_train == 3);
    CHECK(c.phantoms.n_test == 5);
    CHECK(c.optimizer.max_iters == 40);
    CHECK(c.optimizer.conv_window == OptimizerConfig{}.conv_window);
    CHECK(c.eval_methods == std::vector<InitMethod>{InitMethod::original});
    CHECK(phantom_spec(c, "train", 0).kind == PhantomKind::wing_plate);
    CHECK(phantom_spec(c, "train", 3).kind == PhantomKind::noise_blobs);
    CHECK(load_run_config(std::nullopt).seed == 0u);
}

TEST_CASE("bad files are rejected") {
    const auto dir = testing::scratch_dir("config_bad");
    std::ofstream(dir / "unknown.json") << R"({"sed": 1})";
    CHECK_THROWS_AS(load_run_config(dir / "unknown.json"), std::invalid_argument);
    std::ofstream(dir / "syntax.json") << "{";
    CHECK_THROWS_AS(load_run_config(dir / "syntax.json"), std::invalid_argument);
    std::ofstream(dir / "invalid.json") << R"({"eval_cases": -1})";
    CHECK_THROWS_AS(load_run_config(dir / "invalid.json"), std::invalid_argument);
    std::ofstream(dir / "kinds.json") << R"({"phantoms": {"kinds": []}})";
    CHECK_THROWS_AS(load_run_config(dir / "kinds.json"), std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(dir / "absent.json"), IoError);
}

TEST_CASE("config path resolution") {
    ::unsetenv(kConfigEnvVar);
    CHECK_FALSE(resolve_config_path(std::nullopt).has_value());
    ::setenv(kConfigEnvVar, "/tmp/from_env.json", 1);
    CHECK(resolve_config_path(std::nullopt) == std::filesystem::path("/tmp/from_env.json"));
    CHECK(resolve_config_path(std::filesystem::path("x.json")) == std::filesystem::path("x.json"));
    ::unsetenv(kConfigEnvVar);
}

TEST_CASE("provenance and derived settings") {
    RunConfig c;
    c.seed = 5;
    const auto p = provenance(c, "evaluate", {{"extra", 1}});
    CHECK(p.at("tool") == "poseinit");
    CHECK(p.at("command") == "evaluate");
    CHECK(p.at("root_seed") == 5);
    CHECK(p.at("config_hash") == config_hash(c));
    CHECK(p.at("extra") == 1);
    CHECK(p.at("version") == tool_version());

    CHECK(phantom_spec(c, "train", 0).seed != phantom_spec(c, "test", 0).seed);
    CHECK(phantom_spec(c, "train", 1).seed == c.seed_for("phantom/train/1"));
    CHECK_THROWS_AS(phantom_spec(c, "val", 0), std::invalid_argument);

    c.phantoms.dims = {24, 24, 24};
    c.phantoms.spacing_mm = 10.0;
    c.phantoms.n_test = 2;
    const auto set = make_phantom_set(c, "test");
    REQUIRE(set.size() == 2u);
    CHECK(set[0].dims() == std::array<int, 3>{24, 24, 24});
    CHECK(set[0] == make_phantom(c.phantoms.dims, 10.0, phantom_spec(c, "test", 0)));

    const auto e = experiment_config(c);
    CHECK(e.seed == c.seed_for("eval"));
    CHECK(e.n_cases == c.eval_cases);
    CHECK(e.methods == c.eval_methods);
}
