#pragma once

#include <array>
#include <functional>
#include <vector>

#include "poseinit/errors.hpp"
#include "poseinit/geometry.hpp"
#include "poseinit/image.hpp"
#include "poseinit/projector.hpp"
#include "poseinit/similarity.hpp"
#include "poseinit/volume.hpp"

namespace poseinit {

struct OptimizerConfig {
    double lr_rot_deg = 20.0;
    double lr_trans_mm = 20.0;
    double momentum = 0.9;
    double fd_step_rot_deg = 0.1;
    double fd_step_trans_mm = 0.5;
    int max_iters = 300;
    double conv_tol = 1e-5;
    int conv_window = 10;
    /// Improvements are measured relative to max(|previous mean|, this), so
    /// losses that approach zero are judged on an absolute scale.
    double conv_loss_scale = 1.0;
    bool record_theta_trace = true;

    void validate() const;
};

struct RegistrationResult {
    PoseParams theta_final;
    int iterations = 0;
    bool converged = false;
    std::vector<double> loss_trace;
    std::vector<PoseParams> theta_trace;
};

/// Image loss L(target, moving) >= 0, zero at perfect alignment. The built-in
/// metrics come from image_loss(); learned similarities can be plugged in here.
using ImageLoss = std::function<double(const DetectorImage& target, const DetectorImage& moving)>;

ImageLoss image_loss(SimilarityKind kind);

/// Everything needed to evaluate L(theta). Holds references; the referenced
/// objects must outlive the problem.
struct RegistrationProblem {
    const DetectorImage& target;
    const Volume& volume;
    const CameraGeometry& camera;
    ProjectionConfig projection;
    ImageLoss loss;
};

/// Thrown when the loss becomes non-finite or the moving image degenerates
/// mid-run. Carries the loss trace and the last pose.
class RegistrationDiverged : public DivergedError {
public:
    RegistrationDiverged(const std::string& what, std::vector<double> trace, PoseParams last)
        : DivergedError(what, std::move(trace)), last_(last) {}
    const PoseParams& last_theta() const { return last_; }

private:
    PoseParams last_;
};

double loss_at(const PoseParams& theta, const RegistrationProblem& problem);

/// Convenience overload using a built-in metric.
double loss_at(const PoseParams& theta, const DetectorImage& target, const Volume& v,
               const CameraGeometry& cam, SimilarityKind kind,
               const ProjectionConfig& proj = {});

/// Central finite differences of L over the six pose parameters (12 renders).
/// Rotations are probed at +-fd_step_rot_deg, translations at +-fd_step_trans_mm.
std::array<double, 6> gradient_fd(const PoseParams& theta, const RegistrationProblem& problem,
                                  const OptimizerConfig& opt);

/// Windowed convergence test on a loss trace: with W = window and n entries
/// (n > W), compares the mean of the last W losses against the mean of the
/// up to W losses before them, and reports convergence when the improvement
/// divided by max(|previous mean|, loss_scale) falls below tol.
bool convergence_reached(const std::vector<double>& trace, int window, double tol,
                         double loss_scale = 0.0);

/// Momentum gradient descent from theta0:
///   v <- momentum * v + lr (.) g,  theta <- theta - v
/// with lr = lr_rot_deg on the rotation components and lr_trans_mm on the
/// translations. Each iteration records L(theta) before deciding to stop.
RegistrationResult register_pose(const RegistrationProblem& problem, const PoseParams& theta0,
                                 const OptimizerConfig& opt);

RegistrationResult register_pose(const DetectorImage& target, const Volume& v,
                                 const CameraGeometry& cam, const PoseParams& theta0,
                                 const OptimizerConfig& opt, SimilarityKind kind,
                                 const ProjectionConfig& proj = {});

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);
void to_json(nlohmann::json& j, const RegistrationResult& r);

}  // namespace poseinit
