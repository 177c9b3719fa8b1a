#include "poseinit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "poseinit/errors.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/rng.hpp"
#include "poseinit/stats.hpp"

namespace poseinit {

namespace fs = std::filesystem;

std::string to_string(Environment e) {
    return e == Environment::standard ? "standard" : "extended";
}

Environment environment_from_string(const std::string& s) {
    if (s == "standard") {
        return Environment::standard;
    }
    if (s == "extended") {
        return Environment::extended;
    }
    throw std::invalid_argument("unknown environment '" + s + "'");
}

PoseRange range_for(Environment e) {
    return e == Environment::standard ? PoseRange::standard() : PoseRange::extended();
}

std::string to_string(InitMethod m) {
    switch (m) {
        case InitMethod::original:
            return "original";
        case InitMethod::proposed_1:
            return "proposed_1";
        case InitMethod::proposed_2_pe:
            return "proposed_2_pe";
        case InitMethod::proposed_2_pe_ac:
            return "proposed_2_pe_ac";
    }
    return "unknown";
}

InitMethod init_method_from_string(const std::string& s) {
    for (auto m : {InitMethod::original, InitMethod::proposed_1, InitMethod::proposed_2_pe,
                   InitMethod::proposed_2_pe_ac}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw std::invalid_argument("unknown init method '" + s + "'");
}

std::optional<InitializerVariant> variant_for(InitMethod m) {
    switch (m) {
        case InitMethod::original:
            return std::nullopt;
        case InitMethod::proposed_1:
            return InitializerVariant::target_only;
        case InitMethod::proposed_2_pe:
            return InitializerVariant::two_image_pe;
        case InitMethod::proposed_2_pe_ac:
            return InitializerVariant::two_image_pe_ac;
    }
    return std::nullopt;
}

std::string to_string(Stage s) { return s == Stage::registration ? "registration" : "initializer"; }

std::array<double, 6> pose_errors(const PoseParams& est, const PoseParams& truth) {
    const auto a = est.to_array();
    const auto b = truth.to_array();
    std::array<double, 6> e{};
    for (std::size_t i = 0; i < 6; ++i) {
        const double d = a[i] - b[i];
        e[i] = std::abs(i < 3 ? wrap_degrees(d) : d);
    }
    return e;
}

namespace {

ErrorStats stats_of(std::span<const CaseResult> results, bool use_init) {
    if (results.empty()) {
        throw std::invalid_argument("aggregate: no results");
    }
    ErrorStats s;
    s.n_cases = static_cast<int>(results.size());
    double rot_sq = 0.0, rot_abs = 0.0, trans_sq = 0.0, xy_abs = 0.0, z_abs = 0.0, iters = 0.0;
    for (const auto& c : results) {
        const auto e = pose_errors(use_init ? c.theta_init : c.theta_final, c.theta_true);
        for (std::size_t i = 0; i < 3; ++i) {
            rot_sq += e[i] * e[i];
            rot_abs += e[i];
            trans_sq += e[i + 3] * e[i + 3];
        }
        xy_abs += e[3] + e[4];
        z_abs += e[5];
        iters += c.iterations;
    }
    const double n = static_cast<double>(results.size());
    s.mean_iters = use_init ? 0.0 : iters / n;
    s.rot_rmse_deg = std::sqrt(rot_sq / (3.0 * n));
    s.rot_mae_deg = rot_abs / (3.0 * n);
    s.trans_rmse_mm = std::sqrt(trans_sq / (3.0 * n));
    s.xy_trans_mae_mm = xy_abs / (2.0 * n);
    s.z_trans_mae_mm = z_abs / n;
    return s;
}

double rmse3(const std::array<double, 6>& e, std::size_t first) {
    return std::sqrt((e[first] * e[first] + e[first + 1] * e[first + 1] +
                      e[first + 2] * e[first + 2]) /
                     3.0);
}

}  // namespace

ErrorStats aggregate(std::span<const CaseResult> results) { return stats_of(results, false); }

ErrorStats aggregate_initializer(std::span<const CaseResult> results) {
    return stats_of(results, true);
}

double case_rot_rmse(const CaseResult& c) {
    return rmse3(pose_errors(c.theta_final, c.theta_true), 0);
}

double case_trans_rmse(const CaseResult& c) {
    return rmse3(pose_errors(c.theta_final, c.theta_true), 3);
}

const ReportRow* ErrorReport::find(Environment e, InitMethod m, Stage s) const {
    for (const auto& r : rows) {
        if (r.environment == e && r.init_method == m && r.stage == s) {
            return &r;
        }
    }
    return nullptr;
}

namespace {

const Environment kEnvironments[] = {Environment::standard, Environment::extended};
const InitMethod kMethods[] = {InitMethod::original, InitMethod::proposed_1,
                               InitMethod::proposed_2_pe, InitMethod::proposed_2_pe_ac};

std::vector<CaseResult> select(std::span<const CaseResult> results, Environment e,
                               InitMethod m) {
    std::vector<CaseResult> out;
    for (const auto& c : results) {
        if (c.environment == e && c.init_method == m) {
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const CaseResult& a, const CaseResult& b) { return a.case_id < b.case_id; });
    return out;
}

// Pairs each proposed case with the original case of the same id.
std::vector<std::pair<CaseResult, CaseResult>> pairs(std::span<const CaseResult> results,
                                                     Environment e, InitMethod m) {
    const auto base = select(results, e, InitMethod::original);
    const auto prop = select(results, e, m);
    std::vector<std::pair<CaseResult, CaseResult>> out;
    std::size_t j = 0;
    for (const auto& p : prop) {
        while (j < base.size() && base[j].case_id < p.case_id) {
            ++j;
        }
        if (j < base.size() && base[j].case_id == p.case_id) {
            out.emplace_back(base[j], p);
        }
    }
    return out;
}

}  // namespace

ErrorReport build_report(std::span<const CaseResult> results) {
    ErrorReport report;
    for (auto e : kEnvironments) {
        for (auto m : kMethods) {
            const auto group = select(results, e, m);
            if (group.empty()) {
                continue;
            }
            report.rows.push_back({e, m, Stage::registration, aggregate(group)});
        }
        for (auto m : {InitMethod::original, InitMethod::proposed_1}) {
            const auto group = select(results, e, m);
            if (group.empty()) {
                continue;
            }
            report.rows.push_back({e, m, Stage::initializer, aggregate_initializer(group)});
        }
    }
    for (auto e : kEnvironments) {
        for (auto m : kMethods) {
            if (m == InitMethod::original) {
                continue;
            }
            const auto pr = pairs(results, e, m);
            if (pr.size() < 2) {
                continue;
            }
            std::vector<double> drot, dtrans;
            for (const auto& [o, p] : pr) {
                drot.push_back(case_rot_rmse(o) - case_rot_rmse(p));
                dtrans.push_back(case_trans_rmse(o) - case_trans_rmse(p));
            }
            for (const auto& [metric, d] :
                 {std::pair<std::string, const std::vector<double>*>{"rot_rmse", &drot},
                  {"trans_rmse", &dtrans}}) {
                const auto tt = stats::paired_one_tailed_ttest(*d);
                report.significance.push_back(
                    {e, m, metric, static_cast<int>(d->size()), tt.mean, tt.t, tt.p});
            }
        }
    }
    return report;
}

const PoseRange& ExperimentConfig::range(Environment e) const {
    return e == Environment::standard ? standard_range : extended_range;
}

void ExperimentConfig::validate() const {
    if (environments.empty() || methods.empty()) {
        throw std::invalid_argument("experiment: need at least one environment and one method");
    }
    if (n_cases < 0) {
        throw std::invalid_argument("experiment: n_cases must be >= 0");
    }
    camera.validate();
    projection.validate();
    optimizer.validate();
    standard_range.validate();
    extended_range.validate();
}

std::vector<CaseResult> run_experiment(std::span<const Volume> volumes,
                                       const ExperimentConfig& cfg, const ModelSet& models,
                                       const CaseCallback& on_case) {
    cfg.validate();
    if (volumes.empty()) {
        throw std::invalid_argument("run_experiment: need at least one test volume");
    }
    for (auto e : cfg.environments) {
        for (auto m : cfg.methods) {
            const auto v = variant_for(m);
            if (v && !models.contains({e, *v})) {
                throw std::invalid_argument("run_experiment: no trained " + to_string(*v) +
                                            " model for the " + to_string(e) + " environment");
            }
        }
    }

    ProjectionConfig render_cfg = cfg.projection;
    render_cfg.normalize_output = true;
    std::vector<DetectorImage> references(volumes.size());
    parallel_for(volumes.size(), [&](std::size_t i) {
        references[i] = render_drr(volumes[i], PoseParams{}, cfg.camera, render_cfg);
    });

    struct Job {
        Environment env;
        int case_id;
        PoseParams truth;
        PoseParams naive;
    };
    std::vector<Job> jobs;
    for (auto e : cfg.environments) {
        const PoseRange& range = cfg.range(e);
        Rng poses(derive_seed(cfg.seed, "eval/" + to_string(e) + "/poses"));
        Rng naive(derive_seed(cfg.seed, "eval/" + to_string(e) + "/naive"));
        for (int i = 0; i < cfg.n_cases; ++i) {
            const PoseParams truth = sample_pose(range, poses);
            const PoseParams start = sample_pose(range, naive);
            jobs.push_back({e, i, truth, cfg.random_naive ? start : PoseParams{}});
        }
    }

    const std::size_t n_methods = cfg.methods.size();
    std::vector<CaseResult> results(jobs.size() * n_methods);
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        const std::size_t vi = static_cast<std::size_t>(job.case_id) % volumes.size();
        const Volume& vol = volumes[vi];
        const DetectorImage target = render_drr(vol, job.truth, cfg.camera, render_cfg);
        for (std::size_t k = 0; k < n_methods; ++k) {
            CaseResult c;
            c.case_id = job.case_id;
            c.environment = job.env;
            c.init_method = cfg.methods[k];
            c.theta_true = job.truth;
            if (const auto v = variant_for(c.init_method)) {
                c.theta_init =
                    predict_initial_pose(models.at({job.env, *v}), target, &references[vi]);
            } else {
                c.theta_init = job.naive;
            }
            try {
                const auto r = register_pose(target, vol, cfg.camera, c.theta_init,
                                             cfg.optimizer, cfg.similarity, render_cfg);
                c.theta_final = r.theta_final;
                c.iterations = r.iterations;
                c.converged = r.converged;
            } catch (const RegistrationDiverged& d) {
                c.theta_final = d.last_theta();
                c.iterations = static_cast<int>(d.trace().size());
                c.converged = false;
            }
            results[j * n_methods + k] = c;
        }
    });
    if (on_case) {
        for (const auto& c : results) {
            on_case(c);
        }
    }
    return results;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const CaseResult& c) {
    j = nlohmann::json{{"case_id", c.case_id},
                       {"environment", to_string(c.environment)},
                       {"init_method", to_string(c.init_method)},
                       {"theta_true", c.theta_true},
                       {"theta_init", c.theta_init},
                       {"theta_final", c.theta_final},
                       {"iterations", c.iterations},
                       {"converged", c.converged}};
}

void from_json(const nlohmann::json& j, CaseResult& c) {
    c.case_id = j.at("case_id").get<int>();
    c.environment = environment_from_string(j.at("environment").get<std::string>());
    c.init_method = init_method_from_string(j.at("init_method").get<std::string>());
    c.theta_true = j.at("theta_true").get<PoseParams>();
    c.theta_init = j.at("theta_init").get<PoseParams>();
    c.theta_final = j.at("theta_final").get<PoseParams>();
    c.iterations = j.at("iterations").get<int>();
    c.converged = j.at("converged").get<bool>();
}

void to_json(nlohmann::json& j, const ErrorStats& s) {
    j = nlohmann::json{{"n_cases", s.n_cases},
                       {"mean_iters", s.mean_iters},
                       {"rot_rmse_deg", s.rot_rmse_deg},
                       {"trans_rmse_mm", s.trans_rmse_mm},
                       {"rot_mae_deg", s.rot_mae_deg},
                       {"xy_trans_mae_mm", s.xy_trans_mae_mm},
                       {"z_trans_mae_mm", s.z_trans_mae_mm}};
}

void to_json(nlohmann::json& j, const ErrorReport& r) {
    j = nlohmann::json::object();
    j["pooling"] = "per-component errors pooled over all cases";
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
        j["rows"].push_back({{"environment", to_string(row.environment)},
                             {"init_method", to_string(row.init_method)},
                             {"stage", to_string(row.stage)},
                             {"stats", row.stats}});
    }
    j["significance"] = nlohmann::json::array();
    for (const auto& s : r.significance) {
        j["significance"].push_back({{"environment", to_string(s.environment)},
                                     {"init_method", to_string(s.init_method)},
                                     {"metric", s.metric},
                                     {"n", s.n},
                                     {"mean_delta", s.mean_delta},
                                     {"t", s.t},
                                     {"p", s.p}});
    }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> envs, methods;
    for (auto e : c.environments) {
        envs.push_back(to_string(e));
    }
    for (auto m : c.methods) {
        methods.push_back(to_string(m));
    }
    j = nlohmann::json{{"environments", envs},
                       {"methods", methods},
                       {"n_cases", c.n_cases},
                       {"seed", c.seed},
                       {"camera", c.camera},
                       {"projection", c.projection},
                       {"optimizer", c.optimizer},
                       {"similarity", to_string(c.similarity)},
                       {"standard_range", c.standard_range},
                       {"extended_range", c.extended_range},
                       {"random_naive", c.random_naive}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    if (j.contains("environments")) {
        c.environments.clear();
        for (const auto& e : j.at("environments")) {
            c.environments.push_back(environment_from_string(e.get<std::string>()));
        }
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) {
            c.methods.push_back(init_method_from_string(m.get<std::string>()));
        }
    }
    c.n_cases = j.value("n_cases", c.n_cases);
    c.seed = j.value("seed", c.seed);
    if (j.contains("camera")) {
        c.camera = j.at("camera").get<CameraGeometry>();
    }
    if (j.contains("projection")) {
        c.projection = j.at("projection").get<ProjectionConfig>();
    }
    if (j.contains("optimizer")) {
        c.optimizer = j.at("optimizer").get<OptimizerConfig>();
    }
    if (j.contains("similarity")) {
        c.similarity = similarity_kind_from_string(j.at("similarity").get<std::string>());
    }
    if (j.contains("standard_range")) {
        c.standard_range = j.at("standard_range").get<PoseRange>();
    }
    if (j.contains("extended_range")) {
        c.extended_range = j.at("extended_range").get<PoseRange>();
    }
    c.random_naive = j.value("random_naive", c.random_naive);
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

void write_results_jsonl(std::span<const CaseResult> results, const fs::path& path,
                         const nlohmann::json& provenance) {
    auto out = open_out(path);
    if (!provenance.is_null()) {
        out << nlohmann::json{{"provenance", provenance}}.dump() << '\n';
    }
    for (const auto& c : results) {
        out << nlohmann::json(c).dump() << '\n';
    }
}

std::vector<CaseResult> read_results_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open results " + path.string());
    }
    std::vector<CaseResult> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.is_object() && j.size() == 1 && j.contains("provenance")) {
                continue;
            }
            out.push_back(j.get<CaseResult>());
        } catch (const std::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_table_csv(const ErrorReport& report, const fs::path& path) {
    auto out = open_out(path);
    out << "environment,init_method,stage,n_cases,Mean Iters,Rot. RMSE,Trans. RMSE,Rot. MAE,"
           "xy-Trans. MAE,z-Trans. MAE\n";
    for (const auto& r : report.rows) {
        const auto& s = r.stats;
        out << to_string(r.environment) << ',' << to_string(r.init_method) << ','
            << to_string(r.stage) << ',' << s.n_cases << ',' << num(s.mean_iters) << ','
            << num(s.rot_rmse_deg) << ',' << num(s.trans_rmse_mm) << ',' << num(s.rot_mae_deg)
            << ',' << num(s.xy_trans_mae_mm) << ',' << num(s.z_trans_mae_mm) << '\n';
    }
}

void write_delta_csv(std::span<const CaseResult> results, const fs::path& path) {
    auto out = open_out(path);
    out << "environment,init_method,case_id,rot_rmse_original,rot_rmse_method,rot_rmse_delta,"
           "trans_rmse_original,trans_rmse_method,trans_rmse_delta\n";
    for (auto e : kEnvironments) {
        for (auto m : kMethods) {
            if (m == InitMethod::original) {
                continue;
            }
            for (const auto& [o, p] : pairs(results, e, m)) {
                const double ro = case_rot_rmse(o), rp = case_rot_rmse(p);
                const double to = case_trans_rmse(o), tp = case_trans_rmse(p);
                out << to_string(e) << ',' << to_string(m) << ',' << p.case_id << ',' << num(ro)
                    << ',' << num(rp) << ',' << num(ro - rp) << ',' << num(to) << ','
                    << num(tp) << ',' << num(to - tp) << '\n';
            }
        }
    }
}

}  // namespace poseinit
