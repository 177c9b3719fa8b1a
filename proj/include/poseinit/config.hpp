#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseinit/evaluation.hpp"
#include "poseinit/geometry.hpp"
#include "poseinit/initializer.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/registration.hpp"
#include "poseinit/volume.hpp"

namespace poseinit {

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnvVar = "POSEINIT_CONFIG";

std::string tool_version();

struct PhantomSetConfig {
    std::array<int, 3> dims{128, 128, 128};
    double spacing_mm = 2.0;
    int n_train = 20;
    int n_test = 5;
    /// Phantom i of a split uses kinds[i % kinds.size()].
    std::vector<PhantomKind> kinds{PhantomKind::shell_pair};
};

/// Everything a workflow needs. Keys missing from a config file keep these
/// defaults; see README for the schema.
struct RunConfig {
    CameraGeometry camera;
    ProjectionConfig projection;
    OptimizerConfig optimizer;
    TrainingConfig training;
    PoseRange standard_range = PoseRange::standard();
    PoseRange extended_range = PoseRange::extended();
    PhantomSetConfig phantoms;
    SimilarityKind similarity = SimilarityKind::grad_ncc;
    int pe_frequencies = 1;
    int eval_cases = 100;
    std::vector<InitMethod> eval_methods{InitMethod::original, InitMethod::proposed_1,
                                         InitMethod::proposed_2_pe,
                                         InitMethod::proposed_2_pe_ac};
    bool random_naive = false;
    std::uint64_t seed = 0;
    std::string output_dir = "poseinit_out";

    void validate() const;
    const PoseRange& range(Environment e) const;
    /// Seed of a labeled subsystem, derive_seed(seed, label).
    std::uint64_t seed_for(std::string_view label) const;
};

void to_json(nlohmann::json& j, const PhantomSetConfig& c);
void from_json(const nlohmann::json& j, PhantomSetConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Explicit path if given, else $POSEINIT_CONFIG if set, else none.
std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::filesystem::path>& explicit_path);

/// Defaults overlaid with the file at path (if any). Validates the result.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

/// 16 hex digits of fnv1a64 over the canonical JSON dump.
std::string config_hash(const RunConfig& c);

/// Provenance block embedded in every artifact.
nlohmann::json provenance(const RunConfig& c, const std::string& command,
                          const nlohmann::json& extra = nlohmann::json::object());

/// Phantom i of a split ("train" or "test"); seeds are
/// derive_seed(seed, "phantom/<split>/<i>").
PhantomSpec phantom_spec(const RunConfig& c, const std::string& split, int i);
std::vector<Volume> make_phantom_set(const RunConfig& c, const std::string& split);

ExperimentConfig experiment_config(const RunConfig& c);

}  // namespace poseinit
