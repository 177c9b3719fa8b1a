#include "poseinit/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "poseinit/errors.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/rng.hpp"

#ifndef POSEINIT_VERSION
#define POSEINIT_VERSION "0.0.0"
#endif

namespace poseinit {

namespace fs = std::filesystem;

std::string tool_version() { return POSEINIT_VERSION; }

void RunConfig::validate() const {
    camera.validate();
    projection.validate();
    optimizer.validate();
    training.validate();
    standard_range.validate();
    extended_range.validate();
    for (int d : phantoms.dims) {
        if (d < 16) {
            throw std::invalid_argument("config: phantom dims must be >= 16");
        }
    }
    if (!(phantoms.spacing_mm > 0.0) || phantoms.n_train < 1 || phantoms.n_test < 1) {
        throw std::invalid_argument(
            "config: phantom spacing_mm, n_train and n_test must be positive");
    }
    if (phantoms.kinds.empty()) {
        throw std::invalid_argument("config: phantoms.kinds is empty");
    }
    if (pe_frequencies < 1) {
        throw std::invalid_argument("config: pe_frequencies must be >= 1");
    }
    if (eval_cases < 0) {
        throw std::invalid_argument("config: eval_cases must be >= 0");
    }
    if (eval_methods.empty()) {
        throw std::invalid_argument("config: eval_methods is empty");
    }
    if (output_dir.empty()) {
        throw std::invalid_argument("config: output_dir is empty");
    }
}

const PoseRange& RunConfig::range(Environment e) const {
    return e == Environment::standard ? standard_range : extended_range;
}

std::uint64_t RunConfig::seed_for(std::string_view label) const {
    return derive_seed(seed, label);
}

void to_json(nlohmann::json& j, const PhantomSetConfig& c) {
    j = nlohmann::json{{"dims", c.dims},
                       {"spacing_mm", c.spacing_mm},
                       {"n_train", c.n_train},
                       {"n_test", c.n_test}};
    std::vector<std::string> kinds;
    for (auto k : c.kinds) {
        kinds.push_back(to_string(k));
    }
    j["kinds"] = kinds;
}

void from_json(const nlohmann::json& j, PhantomSetConfig& c) {
    c = PhantomSetConfig{};
    c.dims = j.value("dims", c.dims);
    c.spacing_mm = j.value("spacing_mm", c.spacing_mm);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    if (j.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : j.at("kinds")) {
            c.kinds.push_back(phantom_kind_from_string(k.get<std::string>()));
        }
    }
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    std::vector<std::string> methods;
    for (auto m : c.eval_methods) {
        methods.push_back(to_string(m));
    }
    j = nlohmann::json{{"camera", c.camera},
                       {"projection", c.projection},
                       {"optimizer", c.optimizer},
                       {"training", c.training},
                       {"standard_range", c.standard_range},
                       {"extended_range", c.extended_range},
                       {"phantoms", c.phantoms},
                       {"similarity", to_string(c.similarity)},
                       {"pe_frequencies", c.pe_frequencies},
                       {"eval_cases", c.eval_cases},
                       {"eval_methods", methods},
                       {"random_naive", c.random_naive},
                       {"seed", c.seed},
                       {"output_dir", c.output_dir}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    c = RunConfig{};
    if (!j.is_object()) {
        throw std::invalid_argument("config: top level must be an object");
    }
    static const char* known[] = {"camera",         "projection",     "optimizer",
                                  "training",       "standard_range", "extended_range",
                                  "phantoms",       "similarity",     "pe_frequencies",
                                  "eval_cases",     "eval_methods",   "random_naive",
                                  "seed",           "output_dir"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            ok = ok || key == k;
        }
        if (!ok) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    if (j.contains("camera")) {
        c.camera = j.at("camera").get<CameraGeometry>();
    }
    if (j.contains("projection")) {
        c.projection = j.at("projection").get<ProjectionConfig>();
    }
    if (j.contains("optimizer")) {
        c.optimizer = j.at("optimizer").get<OptimizerConfig>();
    }
    if (j.contains("training")) {
        c.training = j.at("training").get<TrainingConfig>();
    }
    if (j.contains("standard_range")) {
        c.standard_range = j.at("standard_range").get<PoseRange>();
    }
    if (j.contains("extended_range")) {
        c.extended_range = j.at("extended_range").get<PoseRange>();
    }
    if (j.contains("phantoms")) {
        c.phantoms = j.at("phantoms").get<PhantomSetConfig>();
    }
    if (j.contains("similarity")) {
        c.similarity = similarity_kind_from_string(j.at("similarity").get<std::string>());
    }
    c.pe_frequencies = j.value("pe_frequencies", c.pe_frequencies);
    c.eval_cases = j.value("eval_cases", c.eval_cases);
    if (j.contains("eval_methods")) {
        c.eval_methods.clear();
        for (const auto& m : j.at("eval_methods")) {
            c.eval_methods.push_back(init_method_from_string(m.get<std::string>()));
        }
    }
    c.random_naive = j.value("random_naive", c.random_naive);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
}

std::optional<fs::path> resolve_config_path(const std::optional<fs::path>& explicit_path) {
    if (explicit_path) {
        return explicit_path;
    }
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
        return fs::path(env);
    }
    return std::nullopt;
}

RunConfig load_run_config(const std::optional<fs::path>& path) {
    RunConfig c;
    if (path) {
        std::ifstream in(*path);
        if (!in) {
            throw IoError("cannot open config " + path->string());
        }
        try {
            c = nlohmann::json::parse(in).get<RunConfig>();
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config " + path->string() + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(nlohmann::json(c).dump())));
    return buf;
}

nlohmann::json provenance(const RunConfig& c, const std::string& command,
                          const nlohmann::json& extra) {
    nlohmann::json p{{"tool", "poseinit"},
                     {"version", tool_version()},
                     {"command", command},
                     {"config_hash", config_hash(c)},
                     {"root_seed", c.seed},
                     {"config", c}};
    for (const auto& [k, v] : extra.items()) {
        p[k] = v;
    }
    return p;
}

PhantomSpec phantom_spec(const RunConfig& c, const std::string& split, int i) {
    if (split != "train" && split != "test") {
        throw std::invalid_argument("phantom split must be 'train' or 'test'");
    }
    if (c.phantoms.kinds.empty()) {
        throw std::invalid_argument("phantoms.kinds is empty");
    }
    PhantomSpec s;
    s.kind = c.phantoms.kinds[static_cast<std::size_t>(i) % c.phantoms.kinds.size()];
    s.seed = c.seed_for("phantom/" + split + "/" + std::to_string(i));
    return s;
}

std::vector<Volume> make_phantom_set(const RunConfig& c, const std::string& split) {
    const int n = split == "train" ? c.phantoms.n_train : c.phantoms.n_test;
    std::vector<PhantomSpec> specs;
    for (int i = 0; i < n; ++i) {
        specs.push_back(phantom_spec(c, split, i));
    }
    std::vector<Volume> out(static_cast<std::size_t>(n), Volume({2, 2, 2}, 1.0));
    parallel_for(specs.size(), [&](std::size_t i) {
        out[i] = make_phantom(c.phantoms.dims, c.phantoms.spacing_mm, specs[i]);
    });
    return out;
}

ExperimentConfig experiment_config(const RunConfig& c) {
    ExperimentConfig e;
    e.methods = c.eval_methods;
    e.n_cases = c.eval_cases;
    e.seed = c.seed_for("eval");
    e.camera = c.camera;
    e.projection = c.projection;
    e.optimizer = c.optimizer;
    e.similarity = c.similarity;
    e.standard_range = c.standard_range;
    e.extended_range = c.extended_range;
    e.random_naive = c.random_naive;
    return e;
}

}  // namespace poseinit
