#include "poseinit/registration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "poseinit/parallel.hpp"

namespace poseinit {

void OptimizerConfig::validate() const {
    if (!(lr_rot_deg > 0.0) || !(lr_trans_mm > 0.0) || !(fd_step_rot_deg > 0.0) ||
        !(fd_step_trans_mm > 0.0)) {
        throw std::invalid_argument("optimizer: step sizes must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("optimizer: momentum must lie in [0, 1)");
    }
    if (max_iters < 1 || conv_window < 1) {
        throw std::invalid_argument("optimizer: max_iters and conv_window must be >= 1");
    }
    if (!(conv_tol >= 0.0) || !(conv_loss_scale >= 0.0)) {
        throw std::invalid_argument("optimizer: conv_tol and conv_loss_scale must be non-negative");
    }
}

ImageLoss image_loss(SimilarityKind kind) {
    return [kind](const DetectorImage& target, const DetectorImage& moving) {
        return similarity_loss(kind, target, moving);
    };
}

double loss_at(const PoseParams& theta, const RegistrationProblem& problem) {
    const DetectorImage moving =
        render_drr(problem.volume, theta, problem.camera, problem.projection);
    return problem.loss(problem.target, moving);
}

double loss_at(const PoseParams& theta, const DetectorImage& target, const Volume& v,
               const CameraGeometry& cam, SimilarityKind kind, const ProjectionConfig& proj) {
    return loss_at(theta, RegistrationProblem{target, v, cam, proj, image_loss(kind)});
}

std::array<double, 6> gradient_fd(const PoseParams& theta, const RegistrationProblem& problem,
                                  const OptimizerConfig& opt) {
    const auto base = theta.to_array();
    std::array<double, 12> probes{};
    parallel_for(12, [&](std::size_t p) {
        const std::size_t comp = p / 2;
        const double h = comp < 3 ? opt.fd_step_rot_deg : opt.fd_step_trans_mm;
        auto shifted = base;
        shifted[comp] += (p % 2 == 0) ? h : -h;
        probes[p] = loss_at(PoseParams::from_array(shifted), problem);
    });
    std::array<double, 6> g{};
    for (std::size_t comp = 0; comp < 6; ++comp) {
        const double h = comp < 3 ? opt.fd_step_rot_deg : opt.fd_step_trans_mm;
        g[comp] = (probes[2 * comp] - probes[2 * comp + 1]) / (2.0 * h);
    }
    return g;
}

bool convergence_reached(const std::vector<double>& trace, int window, double tol,
                         double loss_scale) {
    const auto n = static_cast<std::ptrdiff_t>(trace.size());
    const auto w = static_cast<std::ptrdiff_t>(window);
    if (n <= w) {
        return false;
    }
    // Current window: the last w losses. Previous window: up to w losses
    // immediately before it (shorter early in the run).
    const std::ptrdiff_t prev_begin = std::max<std::ptrdiff_t>(0, n - 2 * w);
    double prev = 0.0;
    for (std::ptrdiff_t i = prev_begin; i < n - w; ++i) {
        prev += trace[static_cast<std::size_t>(i)];
    }
    prev /= static_cast<double>(n - w - prev_begin);
    double cur = 0.0;
    for (std::ptrdiff_t i = n - w; i < n; ++i) {
        cur += trace[static_cast<std::size_t>(i)];
    }
    cur /= static_cast<double>(w);
    const double rel = (prev - cur) / std::max({std::abs(prev), loss_scale, 1e-12});
    return rel < tol;
}

RegistrationResult register_pose(const RegistrationProblem& problem, const PoseParams& theta0,
                                 const OptimizerConfig& opt) {
    opt.validate();
    if (!theta0.is_finite()) {
        throw std::invalid_argument("register: non-finite initial pose");
    }

    RegistrationResult result;
    auto theta = theta0.to_array();
    std::array<double, 6> velocity{};

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        const PoseParams current = PoseParams::from_array(theta);
        double loss = 0.0;
        std::array<double, 6> g{};
        try {
            loss = loss_at(current, problem);
            g = gradient_fd(current, problem, opt);
        } catch (const DegenerateInputError& e) {
            throw RegistrationDiverged(std::string("registration: ") + e.what(),
                                       result.loss_trace, current);
        }
        result.loss_trace.push_back(loss);
        if (opt.record_theta_trace) {
            result.theta_trace.push_back(current);
        }
        result.theta_final = current;
        result.iterations = static_cast<int>(result.loss_trace.size());

        bool finite = std::isfinite(loss);
        for (double gi : g) {
            finite = finite && std::isfinite(gi);
        }
        if (!finite) {
            throw RegistrationDiverged("registration: non-finite loss or gradient",
                                       result.loss_trace, current);
        }
        if (convergence_reached(result.loss_trace, opt.conv_window, opt.conv_tol,
                                opt.conv_loss_scale)) {
            result.converged = true;
            break;
        }
        if (iter + 1 == opt.max_iters) {
            break;
        }
        for (std::size_t c = 0; c < 6; ++c) {
            const double lr = c < 3 ? opt.lr_rot_deg : opt.lr_trans_mm;
            velocity[c] = opt.momentum * velocity[c] + lr * g[c];
            theta[c] -= velocity[c];
        }
    }
    return result;
}

RegistrationResult register_pose(const DetectorImage& target, const Volume& v,
                                 const CameraGeometry& cam, const PoseParams& theta0,
                                 const OptimizerConfig& opt, SimilarityKind kind,
                                 const ProjectionConfig& proj) {
    return register_pose(RegistrationProblem{target, v, cam, proj, image_loss(kind)}, theta0,
                         opt);
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
    j = nlohmann::json{{"lr_rot_deg", c.lr_rot_deg},
                       {"lr_trans_mm", c.lr_trans_mm},
                       {"momentum", c.momentum},
                       {"fd_step_rot_deg", c.fd_step_rot_deg},
                       {"fd_step_trans_mm", c.fd_step_trans_mm},
                       {"max_iters", c.max_iters},
                       {"conv_tol", c.conv_tol},
                       {"conv_window", c.conv_window},
                       {"conv_loss_scale", c.conv_loss_scale}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
    c = OptimizerConfig{};
    c.lr_rot_deg = j.value("lr_rot_deg", c.lr_rot_deg);
    c.lr_trans_mm = j.value("lr_trans_mm", c.lr_trans_mm);
    c.momentum = j.value("momentum", c.momentum);
    c.fd_step_rot_deg = j.value("fd_step_rot_deg", c.fd_step_rot_deg);
    c.fd_step_trans_mm = j.value("fd_step_trans_mm", c.fd_step_trans_mm);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.conv_tol = j.value("conv_tol", c.conv_tol);
    c.conv_window = j.value("conv_window", c.conv_window);
    c.conv_loss_scale = j.value("conv_loss_scale", c.conv_loss_scale);
}

void to_json(nlohmann::json& j, const RegistrationResult& r) {
    j = nlohmann::json{{"theta_final", r.theta_final},
                       {"iterations", r.iterations},
                       {"converged", r.converged},
                       {"loss_trace", r.loss_trace}};
}

}  // namespace poseinit
