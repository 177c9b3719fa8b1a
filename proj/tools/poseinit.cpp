// poseinit command-line tool. Run `poseinit --help` for the workflow.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "poseinit/config.hpp"
#include "poseinit/errors.hpp"
#include "poseinit/evaluation.hpp"
#include "poseinit/grid_io.hpp"
#include "poseinit/image.hpp"
#include "poseinit/initializer.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/registration.hpp"
#include "poseinit/similarity.hpp"
#include "poseinit/volume.hpp"

namespace fs = std::filesystem;
using namespace poseinit;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExistsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    unsigned threads = 0;
    bool overwrite = false;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config(const Globals& g) {
    std::optional<fs::path> explicit_path;
    if (!g.config_path.empty()) {
        explicit_path = g.config_path;
    }
    auto c = load_run_config(resolve_config_path(explicit_path));
    if (g.seed) {
        c.seed = *g.seed;
    }
    c.validate();
    return c;
}

void guard_file(const Globals& g, const fs::path& p) {
    if (fs::exists(p) && !g.overwrite) {
        throw ExistsError(p.string() + " exists (use --overwrite)");
    }
}

void guard_dir(const Globals& g, const fs::path& p) {
    if (fs::exists(p) && !fs::is_empty(p) && !g.overwrite) {
        throw ExistsError(p.string() + " exists and is not empty (use --overwrite)");
    }
}

void require_exists(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) {
        throw IoError(what + " not found: " + p.string());
    }
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
}

void write_json(const fs::path& p, const json& j) {
    ensure_parent(p);
    std::ofstream out(p);
    if (!out) {
        throw IoError("cannot write " + p.string());
    }
    out << j.dump(2) << '\n';
}

// Adds a provenance block to an existing JSON sidecar.
void stamp_sidecar(const fs::path& sidecar, const json& prov) {
    std::ifstream in(sidecar);
    if (!in) {
        throw IoError("cannot read " + sidecar.string());
    }
    json j = json::parse(in);
    in.close();
    j["provenance"] = prov;
    write_json(sidecar, j);
}

fs::path with_suffix(fs::path base, const std::string& ext) {
    base = grid_io::strip_extension(base);
    base += ext;
    return base;
}

std::vector<Volume> load_volumes(const std::vector<std::string>& bases) {
    std::vector<Volume> out;
    for (const auto& b : bases) {
        require_exists(with_suffix(b, ".json"), "volume");
        out.push_back(load_volume(b));
    }
    return out;
}

PoseParams parse_pose(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("bad pose component '" + item + "'");
        }
    }
    if (v.size() != 6) {
        throw UsageError("pose needs 6 comma-separated values rx,ry,rz,tx,ty,tz");
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

fs::path model_path(const fs::path& dir, Environment e, InitializerVariant v) {
    return dir / (to_string(e) + "_" + to_string(v) + ".bin");
}

// phantom -----------------------------------------------------------------

struct PhantomArgs {
    std::string kind = "shell_pair";
    std::uint64_t seed = 1;
    std::vector<int> dims;
    double spacing = 0.0;
    std::string out;
    std::string split;
    std::string out_dir;
};

void print_volume_summary(const std::string& name, const Volume& v) {
    const auto c = v.centroid_mm();
    std::printf("%s dims=%dx%dx%d spacing_mm=%g mass=%.6g centroid_mm=(%.3f,%.3f,%.3f)\n",
                name.c_str(), v.dims()[0], v.dims()[1], v.dims()[2], v.spacing_mm(),
                v.total_mass(), c.x(), c.y(), c.z());
}

void cmd_phantom(const Globals& g, const PhantomArgs& a) {
    auto c = load_config(g);
    if (!a.dims.empty()) {
        if (a.dims.size() != 1 && a.dims.size() != 3) {
            throw UsageError("--dims takes 1 or 3 values");
        }
        c.phantoms.dims = a.dims.size() == 1 ? std::array<int, 3>{a.dims[0], a.dims[0], a.dims[0]}
                                             : std::array<int, 3>{a.dims[0], a.dims[1], a.dims[2]};
    }
    if (a.spacing > 0.0) {
        c.phantoms.spacing_mm = a.spacing;
    }
    c.validate();

    if (!a.split.empty()) {
        if (a.out_dir.empty()) {
            throw UsageError("--split needs --out-dir");
        }
        guard_dir(g, a.out_dir);
        fs::create_directories(a.out_dir);
        const auto set = make_phantom_set(c, a.split);
        for (std::size_t i = 0; i < set.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%s_%03zu", a.split.c_str(), i);
            const auto spec = phantom_spec(c, a.split, static_cast<int>(i));
            const fs::path base = fs::path(a.out_dir) / name;
            save_volume(set[i], base);
            stamp_sidecar(with_suffix(base, ".json"),
                          provenance(c, "phantom", {{"kind", to_string(spec.kind)},
                                                    {"phantom_seed", spec.seed},
                                                    {"split", a.split},
                                                    {"index", i}}));
            print_volume_summary(base.string(), set[i]);
        }
        return;
    }
    if (a.out.empty()) {
        throw UsageError("phantom needs --out or --split/--out-dir");
    }
    PhantomSpec spec;
    spec.kind = phantom_kind_from_string(a.kind);
    spec.seed = a.seed;
    guard_file(g, with_suffix(a.out, ".raw"));
    guard_file(g, with_suffix(a.out, ".json"));
    ensure_parent(a.out);
    const auto v = make_phantom(c.phantoms.dims, c.phantoms.spacing_mm, spec);
    save_volume(v, a.out);
    stamp_sidecar(with_suffix(a.out, ".json"),
                  provenance(c, "phantom", {{"kind", a.kind}, {"phantom_seed", a.seed}}));
    print_volume_summary(grid_io::strip_extension(a.out).string(), v);
}

// gen-data ----------------------------------------------------------------

struct GenDataArgs {
    std::vector<std::string> volumes;
    std::string env = "standard";
    int n = 0;
    std::string out;
};

void cmd_gen_data(const Globals& g, const GenDataArgs& a) {
    const auto c = load_config(g);
    const auto env = environment_from_string(a.env);
    guard_dir(g, a.out);
    const auto vols = a.volumes.empty() ? make_phantom_set(c, "train") : load_volumes(a.volumes);
    const int n = a.n > 0 ? a.n : c.training.n_train_samples;
    const auto seed = c.seed_for("dataset/" + a.env);
    const auto ds = generate_dataset(vols, c.range(env), n, seed, c.camera, c.projection);
    save_dataset(ds, a.out);
    stamp_sidecar(fs::path(a.out) / "manifest.json",
                  provenance(c, "gen-data", {{"environment", a.env},
                                             {"n_samples", n},
                                             {"dataset_seed", seed},
                                             {"volumes", a.volumes}}));
    std::printf("dataset %s samples=%d volumes=%zu env=%s\n", a.out.c_str(), n, vols.size(),
                a.env.c_str());
}

// train-init --------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string variant = "target_only";
    int epochs = 0;
    double lr = 0.0;
    int batch_size = 0;
    std::string out;
    std::string loss_csv;
};

void cmd_train_init(const Globals& g, const TrainArgs& a) {
    auto c = load_config(g);
    if (a.epochs > 0) c.training.epochs = a.epochs;
    if (a.lr > 0.0) c.training.learning_rate = a.lr;
    if (a.batch_size > 0) c.training.batch_size = a.batch_size;
    c.validate();
    const auto variant = initializer_variant_from_string(a.variant);
    const fs::path loss_csv = a.loss_csv.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.loss_csv);
    guard_file(g, a.out);
    guard_file(g, loss_csv);
    require_exists(fs::path(a.data) / "manifest.json", "dataset");

    const auto ds = load_dataset(a.data);
    const auto model_seed = c.seed_for("initializer/" + a.variant);
    auto model = make_model(variant, ds.range, model_seed, c.pe_frequencies);
    const auto report = train(model, ds, c.training, [](int epoch, double loss) {
        std::fprintf(stderr, "epoch %d loss %.6g\n", epoch, loss);
    });

    ensure_parent(a.out);
    save_model(model, a.out,
               provenance(c, "train-init", {{"dataset", a.data},
                                            {"variant", a.variant},
                                            {"model_seed", model_seed},
                                            {"final_loss", report.epoch_loss.back()}}));
    ensure_parent(loss_csv);
    std::ofstream csv(loss_csv);
    if (!csv) {
        throw IoError("cannot write " + loss_csv.string());
    }
    csv << "epoch,loss\n" << std::setprecision(10);
    for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
        csv << i << ',' << report.epoch_loss[i] << '\n';
    }
    std::printf("model %s variant=%s epochs=%zu final_loss=%.6g\n", a.out.c_str(),
                a.variant.c_str(), report.epoch_loss.size(), report.epoch_loss.back());
}

// register ----------------------------------------------------------------

struct RegisterArgs {
    std::string volume;
    std::string target;
    std::string pose;
    std::string init = "original";
    std::string model;
    std::string out;
    std::string diff_prefix;
    std::string trace_csv;
};

void cmd_register(const Globals& g, const RegisterArgs& a) {
    const auto c = load_config(g);
    const auto method = init_method_from_string(a.init);
    if (a.target.empty() == a.pose.empty()) {
        throw UsageError("register needs exactly one of --target or --pose");
    }
    if (variant_for(method) && a.model.empty()) {
        throw UsageError("--init " + a.init + " needs --model");
    }
    guard_file(g, a.out);
    if (!a.trace_csv.empty()) guard_file(g, a.trace_csv);
    if (!a.diff_prefix.empty()) guard_file(g, a.diff_prefix + "_before.png");

    require_exists(with_suffix(a.volume, ".json"), "volume");
    const auto vol = load_volume(a.volume);
    DetectorImage target;
    std::optional<PoseParams> truth;
    if (!a.target.empty()) {
        require_exists(with_suffix(a.target, ".json"), "target image");
        target = load_image(a.target);
    } else {
        truth = parse_pose(a.pose);
        target = render_drr(vol, *truth, c.camera, c.projection);
    }
    if (target.rows != c.camera.detector_rows || target.cols != c.camera.detector_cols) {
        throw std::invalid_argument("target is " + std::to_string(target.rows) + "x" +
                                    std::to_string(target.cols) +
                                    " but camera detector is " +
                                    std::to_string(c.camera.detector_rows) + "x" +
                                    std::to_string(c.camera.detector_cols));
    }

    PoseParams theta0{};
    if (variant_for(method)) {
        require_exists(a.model, "model");
        const auto model = load_model(a.model);
        if (model.variant != *variant_for(method)) {
            throw std::invalid_argument("model " + a.model + " is " + to_string(model.variant) +
                                        ", --init " + a.init + " needs " +
                                        to_string(*variant_for(method)));
        }
        theta0 = predict_initial_pose(model, target, vol, c.camera, c.projection);
    }

    RegistrationProblem problem{target, vol, c.camera, c.projection, image_loss(c.similarity)};
    RegistrationResult res;
    std::string status = "ok";
    try {
        res = register_pose(problem, theta0, c.optimizer);
    } catch (const RegistrationDiverged& e) {
        status = std::string("diverged: ") + e.what();
        res.theta_final = e.last_theta();
        res.loss_trace = e.trace();
        res.iterations = static_cast<int>(e.trace().size());
    }

    json extra{{"init_method", a.init},
               {"theta_init", theta0},
               {"volume", a.volume},
               {"model", a.model}};
    if (truth) {
        extra["target_pose"] = *truth;
    } else {
        extra["target"] = a.target;
    }
    json out = res;
    out["status"] = status;
    if (truth) {
        const auto e = pose_errors(res.theta_final, *truth);
        out["errors"] = e;
    }
    out["provenance"] = provenance(c, "register", extra);
    write_json(a.out, out);

    if (!a.trace_csv.empty()) {
        ensure_parent(a.trace_csv);
        std::ofstream csv(a.trace_csv);
        csv << "iteration,loss,rx_deg,ry_deg,rz_deg,tx_mm,ty_mm,tz_mm\n" << std::setprecision(10);
        for (std::size_t i = 0; i < res.loss_trace.size(); ++i) {
            csv << i << ',' << res.loss_trace[i];
            if (i < res.theta_trace.size()) {
                for (double v : res.theta_trace[i].to_array()) csv << ',' << v;
            }
            csv << '\n';
        }
    }
    if (!a.diff_prefix.empty()) {
        ensure_parent(a.diff_prefix);
        auto proj = c.projection;
        const auto before = render_drr(vol, theta0, c.camera, proj);
        const auto after = render_drr(vol, res.theta_final, c.camera, proj);
        const auto d0 = difference_map(before, target);
        const auto d1 = difference_map(after, target);
        // Shared limit so the two maps are directly comparable.
        double limit = 0.0;
        for (double v : d0.data) limit = std::max(limit, std::abs(v));
        for (double v : d1.data) limit = std::max(limit, std::abs(v));
        write_png_diverging(d0, a.diff_prefix + "_before.png", limit);
        write_png_diverging(d1, a.diff_prefix + "_after.png", limit);
        save_image(d0, a.diff_prefix + "_before");
        save_image(d1, a.diff_prefix + "_after");
        const auto prov = provenance(c, "register", extra);
        stamp_sidecar(a.diff_prefix + "_before.json", prov);
        stamp_sidecar(a.diff_prefix + "_after.json", prov);
    }
    const auto& f = res.theta_final;
    std::printf("register %s init=%s iterations=%d converged=%s theta_final=%.4f,%.4f,%.4f,%.4f,"
                "%.4f,%.4f\n",
                status.c_str(), a.init.c_str(), res.iterations, res.converged ? "true" : "false",
                f.rx_deg, f.ry_deg, f.rz_deg, f.tx_mm, f.ty_mm, f.tz_mm);
}

// evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::vector<std::string> volumes;
    std::string model_dir;
    std::vector<std::string> methods;
    std::vector<std::string> envs;
    int cases = -1;
    std::string out_dir;
};

void cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
    auto c = load_config(g);
    if (a.cases >= 0) c.eval_cases = a.cases;
    if (!a.methods.empty()) {
        c.eval_methods.clear();
        for (const auto& m : a.methods) c.eval_methods.push_back(init_method_from_string(m));
    }
    c.validate();
    auto ecfg = experiment_config(c);
    if (!a.envs.empty()) {
        ecfg.environments.clear();
        for (const auto& e : a.envs) ecfg.environments.push_back(environment_from_string(e));
    }
    ecfg.validate();
    guard_dir(g, a.out_dir);

    ModelSet models;
    for (auto env : ecfg.environments) {
        for (auto m : ecfg.methods) {
            if (const auto v = variant_for(m)) {
                if (a.model_dir.empty()) {
                    throw UsageError("--init " + to_string(m) + " needs --model-dir");
                }
                const auto p = model_path(a.model_dir, env, *v);
                require_exists(p, "model");
                models.emplace(std::pair{env, *v}, load_model(p));
            }
        }
    }
    const auto vols = a.volumes.empty() ? make_phantom_set(c, "test") : load_volumes(a.volumes);

    int done = 0;
    const int total = static_cast<int>(ecfg.environments.size() * ecfg.methods.size()) * ecfg.n_cases;
    const auto results = run_experiment(vols, ecfg, models, [&](const CaseResult&) {
        if (++done % 10 == 0 || done == total) {
            std::fprintf(stderr, "evaluate %d/%d\n", done, total);
        }
    });

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    const auto prov = provenance(c, "evaluate", {{"experiment", ecfg},
                                                 {"volumes", a.volumes},
                                                 {"model_dir", a.model_dir}});
    write_results_jsonl(results, dir / "results.jsonl", prov);
    if (results.empty()) {
        write_json(dir / "report.json", {{"provenance", prov}});
        std::printf("evaluate %s cases=0\n", a.out_dir.c_str());
        return;
    }
    const auto report = build_report(results);
    write_table_csv(report, dir / "table.csv");
    write_delta_csv(results, dir / "delta.csv");
    json rep = report;
    rep["provenance"] = prov;
    write_json(dir / "report.json", rep);
    std::printf("evaluate %s cases=%zu\n", a.out_dir.c_str(), results.size());
    for (const auto& r : report.rows) {
        std::printf("  %-8s %-16s %-12s rotRMSE=%.3f transRMSE=%.3f iters=%.1f\n",
                    to_string(r.environment).c_str(), to_string(r.init_method).c_str(),
                    to_string(r.stage).c_str(), r.stats.rot_rmse_deg, r.stats.trans_rmse_mm,
                    r.stats.mean_iters);
    }
}

// export ------------------------------------------------------------------

struct ExportArgs {
    std::string in;
    std::string out;
    bool diverging = false;
    double limit = 0.0;
    std::string volume;
    std::string pose;
};

void cmd_export(const Globals& g, const ExportArgs& a) {
    const auto c = load_config(g);
    guard_file(g, a.out);
    if (a.in.empty() == a.volume.empty()) {
        throw UsageError("export needs exactly one of --in or --volume");
    }
    DetectorImage img;
    json extra;
    if (!a.in.empty()) {
        require_exists(with_suffix(a.in, ".json"), "image");
        img = load_image(a.in);
        extra["source"] = a.in;
    } else {
        require_exists(with_suffix(a.volume, ".json"), "volume");
        const PoseParams pose = a.pose.empty() ? PoseParams{} : parse_pose(a.pose);
        img = render_drr(load_volume(a.volume), pose, c.camera, c.projection);
        extra["volume"] = a.volume;
        extra["pose"] = pose;
    }
    ensure_parent(a.out);
    if (a.diverging) {
        write_png_diverging(img, a.out, a.limit);
    } else {
        write_png_gray16(img, a.out);
    }
    write_json(a.out + ".json", provenance(c, "export", extra));
    std::printf("export %s %dx%d\n", a.out.c_str(), img.rows, img.cols);
}

int error_exit(const std::string& kind, const std::string& message, int code) {
    json msg = message;
    std::fprintf(stderr, "error kind=%s message=%s\n", kind.c_str(), msg.dump().c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poseinit: DRR pose registration with a learned initializer"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path,
                   std::string("JSON config file (default: $") + kConfigEnvVar + ")");
    app.add_option("--threads", g.threads, "worker threads, 0 = all cores");
    app.add_flag("--overwrite", g.overwrite, "replace existing outputs");
    app.add_option("--seed", g.seed, "root seed (overrides the config)");

    PhantomArgs pa;
    auto* phantom = app.add_subcommand("phantom", "write a synthetic volume (raw + json)");
    phantom->add_option("--kind", pa.kind, "shell_pair | wing_plate | noise_blobs");
    phantom->add_option("--seed", pa.seed, "phantom seed");
    phantom->add_option("--dims", pa.dims, "nx [ny nz], each >= 16");
    phantom->add_option("--spacing", pa.spacing, "voxel spacing in mm");
    phantom->add_option("--out", pa.out, "output base path");
    phantom->add_option("--split", pa.split, "write the configured train or test set instead")
        ->check(CLI::IsMember({"train", "test"}));
    phantom->add_option("--out-dir", pa.out_dir, "directory for --split");

    GenDataArgs ga;
    auto* gen = app.add_subcommand("gen-data", "render an initializer training set");
    gen->add_option("--volumes", ga.volumes, "volume bases (default: configured train set)");
    gen->add_option("--env", ga.env, "standard | extended");
    gen->add_option("--n", ga.n, "number of samples (default: training.n_train_samples)");
    gen->add_option("--out", ga.out, "dataset directory")->required();

    TrainArgs ta;
    auto* tr = app.add_subcommand("train-init", "train an initializer model");
    tr->add_option("--data", ta.data, "dataset directory")->required();
    tr->add_option("--variant", ta.variant, "target_only | two_image_pe | two_image_pe_ac");
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--lr", ta.lr);
    tr->add_option("--batch-size", ta.batch_size);
    tr->add_option("--out", ta.out, "model file")->required();
    tr->add_option("--loss-csv", ta.loss_csv, "per-epoch loss CSV (default: <out>.loss.csv)");

    RegisterArgs ra;
    auto* reg = app.add_subcommand(
        "register",
        "register a volume to a target DRR.\nDifference maps (--diff-prefix) are min-max "
        "normalized moving minus target, written as raw+json and as PNG with a diverging "
        "map: blue (0,0,255) at -limit, white at 0, red (255,0,0) at +limit, where limit is the "
        "largest |value| over the before and after maps.");
    reg->add_option("--volume", ra.volume, "volume base")->required();
    reg->add_option("--target", ra.target, "target image base");
    reg->add_option("--pose", ra.pose, "render the target at rx,ry,rz,tx,ty,tz instead");
    reg->add_option("--init", ra.init, "original | proposed_1 | proposed_2_pe | proposed_2_pe_ac");
    reg->add_option("--model", ra.model, "initializer model for proposed_*");
    reg->add_option("--out", ra.out, "result JSON")->required();
    reg->add_option("--diff-prefix", ra.diff_prefix, "write <prefix>_before/_after maps");
    reg->add_option("--trace-csv", ra.trace_csv, "per-iteration loss and theta CSV");

    EvaluateArgs ea;
    auto* ev = app.add_subcommand(
        "evaluate",
        "paired evaluation of init methods. Models are read from --model-dir as "
        "<env>_<variant>.bin (e.g. standard_target_only.bin). Writes results.jsonl, table.csv, "
        "delta.csv and report.json. Table statistics pool errors per component.");
    ev->add_option("--volumes", ea.volumes, "test volume bases (default: configured test set)");
    ev->add_option("--model-dir", ea.model_dir);
    ev->add_option("--methods", ea.methods, "init methods (default: config eval_methods)");
    ev->add_option("--envs", ea.envs, "environments (default: standard extended)");
    ev->add_option("--cases", ea.cases, "cases per environment (default: config eval_cases)");
    ev->add_option("--out-dir", ea.out_dir)->required();

    ExportArgs xa;
    auto* ex = app.add_subcommand(
        "export",
        "write a PNG of a raw image, or of a DRR of a volume. Grayscale output is 16-bit "
        "after min-max scaling; --diverging maps -limit/0/+limit to blue/white/red "
        "(limit <= 0 uses max |value|).");
    ex->add_option("--in", xa.in, "image base");
    ex->add_option("--volume", xa.volume, "render this volume instead");
    ex->add_option("--pose", xa.pose, "pose for --volume (default 0)");
    ex->add_option("--out", xa.out, "PNG path")->required();
    ex->add_flag("--diverging", xa.diverging);
    ex->add_option("--limit", xa.limit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("usage", e.what(), 2);
    }

    try {
        set_thread_count(g.threads);
        if (*phantom) cmd_phantom(g, pa);
        if (*gen) cmd_gen_data(g, ga);
        if (*tr) cmd_train_init(g, ta);
        if (*reg) cmd_register(g, ra);
        if (*ev) cmd_evaluate(g, ea);
        if (*ex) cmd_export(g, xa);
    } catch (const UsageError& e) {
        return error_exit("usage", e.what(), 2);
    } catch (const ExistsError& e) {
        return error_exit("exists", e.what(), 3);
    } catch (const IoError& e) {
        return error_exit("io", e.what(), 4);
    } catch (const DivergedError& e) {
        return error_exit("diverged", e.what(), 5);
    } catch (const std::invalid_argument& e) {
        return error_exit("validation", e.what(), 6);
    } catch (const json::exception& e) {
        return error_exit("io", e.what(), 4);
    } catch (const std::exception& e) {
        return error_exit("internal", e.what(), 1);
    }
    return 0;
}
