#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "poseinit/geometry.hpp"
#include "poseinit/image.hpp"
#include "poseinit/nn.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/volume.hpp"

namespace poseinit {

/// Input signature of the regression initializer.
///   target_only      [I_t]
///   two_image_pe     [I_t, I_ref, sin(pi u), cos(pi u), sin(pi v), cos(pi v)]
///   two_image_pe_ac  two_image_pe + [u, v]
/// u runs -1 -> 1 across columns, v runs -1 -> 1 down the rows.
enum class InitializerVariant { target_only, two_image_pe, two_image_pe_ac };

std::string to_string(InitializerVariant v);
InitializerVariant initializer_variant_from_string(const std::string& s);

bool needs_reference(InitializerVariant v);

/// Channel count for a variant. Each positional-encoding frequency k adds
/// sin(2^k pi u), cos(2^k pi u), sin(2^k pi v), cos(2^k pi v).
int input_channels(InitializerVariant v, int pe_frequencies = 1);

/// Stacks the network input. Image channels are min-max normalized.
/// moving_ref must be non-null exactly when the variant needs it.
nn::Tensor build_input(InitializerVariant v, const DetectorImage& target,
                       const DetectorImage* moving_ref, int pe_frequencies = 1);

/// Maps a pose into [-1, 1]^6 relative to the range midpoint, and back.
std::array<double, 6> normalize_pose(const PoseParams& p, const PoseRange& range);
PoseParams denormalize_pose(const std::array<double, 6>& n, const PoseRange& range);

struct TrainingSample {
    DetectorImage target_image;
    PoseParams theta_true;
    int volume_id = 0;
};

struct Dataset {
    PoseRange range;
    CameraGeometry camera;
    ProjectionConfig projection;
    std::uint64_t seed = 0;
    std::vector<TrainingSample> samples;
    /// Per-volume DRR at the neutral pose, used by the two-image variants.
    std::vector<DetectorImage> references;
};

/// n samples with poses drawn by sample_pose and targets rendered with
/// normalization on; volumes are used round-robin (sample i uses volume
/// i mod |volumes|).
Dataset generate_dataset(std::span<const Volume> volumes, const PoseRange& range, int n,
                         std::uint64_t seed, const CameraGeometry& cam,
                         const ProjectionConfig& proj);

/// Directory layout: manifest.json plus one raw+json image per sample
/// (sample_NNNNNN) and per volume reference (reference_NNN).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct RegressorModel {
    InitializerVariant variant = InitializerVariant::target_only;
    int pe_frequencies = 1;
    PoseRange range;
    std::uint64_t seed = 0;
    nn::PoseRegressorNet net{1};
};

/// Freshly initialized (seeded) model for a variant.
RegressorModel make_model(InitializerVariant v, const PoseRange& range, std::uint64_t seed,
                          int pe_frequencies = 1);

/// Runs the network and maps its tanh output through the model's range.
PoseParams forward(const RegressorModel& model, const nn::Tensor& input);

struct TrainingConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    int n_train_samples = 2000;

    void validate() const;
};

struct TrainingReport {
    /// Mean per-sample MSE (normalized pose units) over each epoch.
    std::vector<double> epoch_loss;
};

/// MSE between normalized prediction and target averaged over the batch and
/// the six components. Adds dLoss/dparams into grad when it is non-empty.
double batch_loss(const RegressorModel& model, const Dataset& ds,
                  std::span<const std::size_t> indices, std::span<double> grad = {});

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Mini-batch SGD with momentum (v <- mu v + g, w <- w - lr v). Samples are
/// reshuffled each epoch from cfg.seed. Throws DivergedError on a
/// non-finite loss.
TrainingReport train(RegressorModel& model, const Dataset& ds, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch = {});

/// Single-shot initial pose for a target. Two-image variants render the
/// reference at the neutral pose internally.
PoseParams predict_initial_pose(const RegressorModel& model, const DetectorImage& target,
                                const Volume& v, const CameraGeometry& cam,
                                const ProjectionConfig& proj = {});

/// Same, with a caller-supplied reference image (ignored by target_only).
PoseParams predict_initial_pose(const RegressorModel& model, const DetectorImage& target,
                                const DetectorImage* reference);

/// One file: a single-line JSON header terminated by '\n', followed by
/// parameter_count little-endian float32 values in layer order.
void save_model(const RegressorModel& model, const std::filesystem::path& path,
                const nlohmann::json& provenance = nlohmann::json::object());
RegressorModel load_model(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

}  // namespace poseinit
