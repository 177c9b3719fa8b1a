#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseinit/geometry.hpp"
#include "poseinit/initializer.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/registration.hpp"
#include "poseinit/similarity.hpp"
#include "poseinit/volume.hpp"

namespace poseinit {

enum class Environment { standard, extended };

std::string to_string(Environment e);
Environment environment_from_string(const std::string& s);
/// Default sampling range of an environment.
PoseRange range_for(Environment e);

enum class InitMethod { original, proposed_1, proposed_2_pe, proposed_2_pe_ac };

std::string to_string(InitMethod m);
InitMethod init_method_from_string(const std::string& s);
/// Initializer variant behind a proposed method; empty for original.
std::optional<InitializerVariant> variant_for(InitMethod m);

struct CaseResult {
    int case_id = 0;
    Environment environment = Environment::standard;
    InitMethod init_method = InitMethod::original;
    PoseParams theta_true;
    PoseParams theta_init;
    PoseParams theta_final;
    int iterations = 0;
    bool converged = false;

    bool operator==(const CaseResult&) const = default;
};

/// |component differences|; rotation differences are wrapped to [-180, 180)
/// before taking the absolute value.
std::array<double, 6> pose_errors(const PoseParams& est, const PoseParams& truth);

/// Error statistics over a group of cases. Errors are pooled per component:
/// rotation RMSE/MAE over all 3n rotation errors, translation RMSE over 3n,
/// xy MAE over 2n, z MAE over n.
struct ErrorStats {
    int n_cases = 0;
    double mean_iters = 0.0;
    double rot_rmse_deg = 0.0;
    double trans_rmse_mm = 0.0;
    double rot_mae_deg = 0.0;
    double xy_trans_mae_mm = 0.0;
    double z_trans_mae_mm = 0.0;
};

/// Statistics of theta_final. Throws std::invalid_argument on empty input.
ErrorStats aggregate(std::span<const CaseResult> results);
/// Statistics of theta_init, i.e. the initializer alone; mean_iters is 0.
ErrorStats aggregate_initializer(std::span<const CaseResult> results);

enum class Stage { registration, initializer };
std::string to_string(Stage s);

struct ReportRow {
    Environment environment;
    InitMethod init_method;
    Stage stage;
    ErrorStats stats;
};

/// Paired one-tailed test of per-case RMSE(original) - RMSE(method).
struct SignificanceRow {
    Environment environment;
    InitMethod init_method;
    std::string metric;  // "rot_rmse" or "trans_rmse"
    int n = 0;
    double mean_delta = 0.0;
    double t = 0.0;
    double p = 0.5;
};

struct ErrorReport {
    std::vector<ReportRow> rows;
    std::vector<SignificanceRow> significance;

    const ReportRow* find(Environment e, InitMethod m, Stage s) const;
};

/// Per-case RMSE over the three rotation (or translation) components.
double case_rot_rmse(const CaseResult& c);
double case_trans_rmse(const CaseResult& c);

/// Per environment: registration rows for every method present, then
/// initializer-stage rows for original (the constant start pose) and
/// proposed_1. Plus t-tests of every proposed method against original on the
/// same cases.
ErrorReport build_report(std::span<const CaseResult> results);

/// Trained initializer for each (environment, variant) a run needs.
using ModelSet = std::map<std::pair<Environment, InitializerVariant>, RegressorModel>;

struct ExperimentConfig {
    std::vector<Environment> environments{Environment::standard, Environment::extended};
    std::vector<InitMethod> methods{InitMethod::original, InitMethod::proposed_1};
    int n_cases = 100;
    std::uint64_t seed = 0;
    CameraGeometry camera;
    ProjectionConfig projection;
    OptimizerConfig optimizer;
    SimilarityKind similarity = SimilarityKind::grad_ncc;
    PoseRange standard_range = PoseRange::standard();
    PoseRange extended_range = PoseRange::extended();
    /// Original starts from a pose drawn uniformly from the range instead of 0.
    bool random_naive = false;

    const PoseRange& range(Environment e) const;
    void validate() const;
};

using CaseCallback = std::function<void(const CaseResult&)>;

/// Paired protocol: for each environment, n_cases ground-truth poses are drawn
/// from derive_seed(seed, "eval/<env>/poses"), case i uses test volume
/// i mod |volumes|, and every method registers the same target. Results come
/// back ordered by environment, case, then method. Runs that diverge are kept
/// with converged = false and theta_final = last pose reached.
std::vector<CaseResult> run_experiment(std::span<const Volume> volumes,
                                       const ExperimentConfig& cfg, const ModelSet& models,
                                       const CaseCallback& on_case = {});

void to_json(nlohmann::json& j, const CaseResult& c);
void from_json(const nlohmann::json& j, CaseResult& c);
void to_json(nlohmann::json& j, const ErrorStats& s);
void to_json(nlohmann::json& j, const ErrorReport& r);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// One CaseResult object per line. A non-null provenance is written first as
/// {"provenance": {...}}; the reader skips that line.
void write_results_jsonl(std::span<const CaseResult> results, const std::filesystem::path& path,
                         const nlohmann::json& provenance = nullptr);
std::vector<CaseResult> read_results_jsonl(const std::filesystem::path& path);

/// Columns: environment, init_method, stage, n_cases, then
/// Mean Iters, Rot. RMSE, Trans. RMSE, Rot. MAE, xy-Trans. MAE, z-Trans. MAE.
void write_table_csv(const ErrorReport& report, const std::filesystem::path& path);

/// One row per (environment, proposed method, case): the original and
/// proposed per-case RMSEs and their difference, for box plots.
void write_delta_csv(std::span<const CaseResult> results, const std::filesystem::path& path);

}  // namespace poseinit
