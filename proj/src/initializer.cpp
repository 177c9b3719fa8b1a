#include "poseinit/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "poseinit/errors.hpp"
#include "poseinit/grid_io.hpp"
#include "poseinit/parallel.hpp"
#include "poseinit/rng.hpp"

namespace poseinit {

namespace fs = std::filesystem;

std::string to_string(InitializerVariant v) {
    switch (v) {
        case InitializerVariant::target_only:
            return "target_only";
        case InitializerVariant::two_image_pe:
            return "two_image_pe";
        case InitializerVariant::two_image_pe_ac:
            return "two_image_pe_ac";
    }
    return "unknown";
}

InitializerVariant initializer_variant_from_string(const std::string& s) {
    if (s == "target_only") {
        return InitializerVariant::target_only;
    }
    if (s == "two_image_pe") {
        return InitializerVariant::two_image_pe;
    }
    if (s == "two_image_pe_ac") {
        return InitializerVariant::two_image_pe_ac;
    }
    throw std::invalid_argument("unknown initializer variant '" + s + "'");
}

bool needs_reference(InitializerVariant v) { return v != InitializerVariant::target_only; }

int input_channels(InitializerVariant v, int pe_frequencies) {
    switch (v) {
        case InitializerVariant::target_only:
            return 1;
        case InitializerVariant::two_image_pe:
            return 2 + 4 * pe_frequencies;
        case InitializerVariant::two_image_pe_ac:
            return 4 + 4 * pe_frequencies;
    }
    return 0;
}

nn::Tensor build_input(InitializerVariant v, const DetectorImage& target,
                       const DetectorImage* moving_ref, int pe_frequencies) {
    if (pe_frequencies < 1) {
        throw std::invalid_argument("build_input: pe_frequencies must be >= 1");
    }
    if (needs_reference(v) && moving_ref == nullptr) {
        throw std::invalid_argument("build_input: variant " + to_string(v) +
                                    " needs a reference moving image");
    }
    if (!needs_reference(v) && moving_ref != nullptr) {
        throw std::invalid_argument("build_input: target_only takes no reference image");
    }
    if (moving_ref && !moving_ref->same_shape(target)) {
        throw std::invalid_argument("build_input: reference and target shapes differ");
    }
    const int rows = target.rows;
    const int cols = target.cols;
    nn::Tensor t(input_channels(v, pe_frequencies), rows, cols);

    auto copy_image = [&](int ch, const DetectorImage& img) {
        const DetectorImage n = normalized(img);
        std::copy(n.data.begin(), n.data.end(),
                  t.data.begin() + static_cast<std::ptrdiff_t>(ch) * rows * cols);
    };
    copy_image(0, target);
    if (!needs_reference(v)) {
        return t;
    }
    copy_image(1, *moving_ref);

    auto coord = [](int i, int n) { return n > 1 ? -1.0 + 2.0 * i / (n - 1) : 0.0; };
    int ch = 2;
    for (int f = 0; f < pe_frequencies; ++f) {
        const double w = std::numbers::pi * std::ldexp(1.0, f);
        for (int r = 0; r < rows; ++r) {
            const double vv = coord(r, rows);
            for (int c = 0; c < cols; ++c) {
                const double u = coord(c, cols);
                t.at(ch, r, c) = std::sin(w * u);
                t.at(ch + 1, r, c) = std::cos(w * u);
                t.at(ch + 2, r, c) = std::sin(w * vv);
                t.at(ch + 3, r, c) = std::cos(w * vv);
            }
        }
        ch += 4;
    }
    if (v == InitializerVariant::two_image_pe_ac) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                t.at(ch, r, c) = coord(c, cols);
                t.at(ch + 1, r, c) = coord(r, rows);
            }
        }
    }
    return t;
}

std::array<double, 6> normalize_pose(const PoseParams& p, const PoseRange& range) {
    const double rmid = 0.5 * (range.rot_min_deg + range.rot_max_deg);
    const double rhalf = 0.5 * (range.rot_max_deg - range.rot_min_deg);
    const double tmid = 0.5 * (range.trans_min_mm + range.trans_max_mm);
    const double thalf = 0.5 * (range.trans_max_mm - range.trans_min_mm);
    const auto a = p.to_array();
    std::array<double, 6> n{};
    for (std::size_t i = 0; i < 6; ++i) {
        n[i] = i < 3 ? (a[i] - rmid) / rhalf : (a[i] - tmid) / thalf;
    }
    return n;
}

PoseParams denormalize_pose(const std::array<double, 6>& n, const PoseRange& range) {
    const double rmid = 0.5 * (range.rot_min_deg + range.rot_max_deg);
    const double rhalf = 0.5 * (range.rot_max_deg - range.rot_min_deg);
    const double tmid = 0.5 * (range.trans_min_mm + range.trans_max_mm);
    const double thalf = 0.5 * (range.trans_max_mm - range.trans_min_mm);
    std::array<double, 6> a{};
    for (std::size_t i = 0; i < 6; ++i) {
        a[i] = i < 3 ? rmid + rhalf * n[i] : tmid + thalf * n[i];
    }
    return PoseParams::from_array(a);
}

// ---------------------------------------------------------------------------
// Dataset

Dataset generate_dataset(std::span<const Volume> volumes, const PoseRange& range, int n,
                         std::uint64_t seed, const CameraGeometry& cam,
                         const ProjectionConfig& proj) {
    if (volumes.empty()) {
        throw std::invalid_argument("generate_dataset: need at least one volume");
    }
    if (n < 1) {
        throw std::invalid_argument("generate_dataset: n must be >= 1");
    }
    range.validate();
    cam.validate();
    ProjectionConfig render_cfg = proj;
    render_cfg.normalize_output = true;

    Dataset ds;
    ds.range = range;
    ds.camera = cam;
    ds.projection = render_cfg;
    ds.seed = seed;
    ds.samples.resize(static_cast<std::size_t>(n));

    Rng rng(derive_seed(seed, "dataset/poses"));
    for (int i = 0; i < n; ++i) {
        auto& s = ds.samples[static_cast<std::size_t>(i)];
        s.theta_true = sample_pose(range, rng);
        s.volume_id = i % static_cast<int>(volumes.size());
    }
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        auto& s = ds.samples[i];
        s.target_image = render_drr(volumes[static_cast<std::size_t>(s.volume_id)], s.theta_true,
                                    cam, render_cfg);
    });
    ds.references.resize(volumes.size());
    parallel_for(volumes.size(), [&](std::size_t v) {
        ds.references[v] = render_drr(volumes[v], PoseParams{}, cam, render_cfg);
    });
    return ds;
}

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) {
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    }
    return std::string(prefix) + digits;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "poseinit-dataset";
    manifest["version"] = 1;
    manifest["range"] = ds.range;
    manifest["camera"] = ds.camera;
    manifest["projection"] = ds.projection;
    manifest["seed"] = ds.seed;
    manifest["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        const std::string name = numbered("sample_", i, 6);
        save_image(s.target_image, dir / name);
        manifest["samples"].push_back(
            {{"image", name}, {"volume_id", s.volume_id}, {"theta_true", s.theta_true}});
    }
    manifest["references"] = nlohmann::json::array();
    for (std::size_t v = 0; v < ds.references.size(); ++v) {
        const std::string name = numbered("reference_", v, 3);
        save_image(ds.references[v], dir / name);
        manifest["references"].push_back(name);
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) {
        throw IoError("cannot write " + (dir / "manifest.json").string());
    }
    out << manifest.dump(1) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    std::ifstream in(mpath);
    if (!in) {
        throw IoError("cannot open dataset manifest " + mpath.string());
    }
    Dataset ds;
    try {
        nlohmann::json m;
        in >> m;
        ds.range = m.at("range").get<PoseRange>();
        ds.camera = m.at("camera").get<CameraGeometry>();
        ds.projection = m.at("projection").get<ProjectionConfig>();
        ds.seed = m.at("seed").get<std::uint64_t>();
        for (const auto& js : m.at("samples")) {
            TrainingSample s;
            s.target_image = load_image(dir / js.at("image").get<std::string>());
            s.theta_true = js.at("theta_true").get<PoseParams>();
            s.volume_id = js.at("volume_id").get<int>();
            ds.samples.push_back(std::move(s));
        }
        for (const auto& jr : m.at("references")) {
            ds.references.push_back(load_image(dir / jr.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed dataset manifest " + mpath.string() + ": " + e.what());
    }
    for (const auto& s : ds.samples) {
        if (s.volume_id < 0 || static_cast<std::size_t>(s.volume_id) >= ds.references.size()) {
            throw IoError("dataset " + dir.string() + ": sample refers to missing volume");
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Model

RegressorModel make_model(InitializerVariant v, const PoseRange& range, std::uint64_t seed,
                          int pe_frequencies) {
    range.validate();
    RegressorModel m{v, pe_frequencies, range, seed,
                     nn::PoseRegressorNet(input_channels(v, pe_frequencies))};
    m.net.initialize(derive_seed(seed, "initializer/weights"));
    return m;
}

PoseParams forward(const RegressorModel& model, const nn::Tensor& input) {
    if (input.channels != input_channels(model.variant, model.pe_frequencies)) {
        throw std::invalid_argument("forward: input has " + std::to_string(input.channels) +
                                    " channels, variant " + to_string(model.variant) +
                                    " expects " +
                                    std::to_string(input_channels(model.variant,
                                                                  model.pe_frequencies)));
    }
    return denormalize_pose(model.net.forward(input), model.range);
}

void TrainingConfig::validate() const {
    if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0) || n_train_samples < 1) {
        throw std::invalid_argument("training config: epochs, batch_size, learning_rate and "
                                    "n_train_samples must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("training config: momentum must lie in [0, 1)");
    }
}

namespace {

nn::Tensor sample_input(const RegressorModel& model, const Dataset& ds,
                        const TrainingSample& s) {
    const DetectorImage* ref = needs_reference(model.variant)
                                   ? &ds.references.at(static_cast<std::size_t>(s.volume_id))
                                   : nullptr;
    return build_input(model.variant, s.target_image, ref, model.pe_frequencies);
}

}  // namespace

double batch_loss(const RegressorModel& model, const Dataset& ds,
                  std::span<const std::size_t> indices, std::span<double> grad) {
    if (indices.empty()) {
        throw std::invalid_argument("batch_loss: empty batch");
    }
    const bool want_grad = !grad.empty();
    const std::size_t batch = indices.size();
    const std::size_t np = model.net.parameter_count();
    std::vector<double> losses(batch, 0.0);
    std::vector<std::vector<double>> grads(want_grad ? batch : 0);

    parallel_for(batch, [&](std::size_t b) {
        const TrainingSample& s = ds.samples.at(indices[b]);
        nn::PoseRegressorNet::Cache cache;
        const auto y = model.net.forward(sample_input(model, ds, s), want_grad ? &cache : nullptr);
        const auto target = normalize_pose(s.theta_true, model.range);
        std::array<double, 6> dy{};
        double l = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
            const double e = y[k] - target[k];
            l += e * e;
            dy[k] = 2.0 * e / (6.0 * static_cast<double>(batch));
        }
        losses[b] = l / 6.0;
        if (want_grad) {
            grads[b].assign(np, 0.0);
            model.net.backward(cache, dy, grads[b]);
        }
    });

    // Fixed-order reduction keeps results independent of the worker count.
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        total += losses[b];
        if (want_grad) {
            for (std::size_t i = 0; i < np; ++i) {
                grad[i] += grads[b][i];
            }
        }
    }
    return total / static_cast<double>(batch);
}

TrainingReport train(RegressorModel& model, const Dataset& ds, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch) {
    cfg.validate();
    if (ds.samples.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (needs_reference(model.variant) && ds.references.empty()) {
        throw std::invalid_argument("train: two-image variant needs dataset references");
    }

    TrainingReport report;
    Rng rng(derive_seed(cfg.seed, "initializer/shuffle"));
    std::vector<std::size_t> order(ds.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const std::size_t np = model.net.parameter_count();
    std::vector<double> velocity(np, 0.0);
    std::vector<double> grad(np, 0.0);
    auto params = model.net.parameters();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::span<const std::size_t> idx(order.data() + start, end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double l = batch_loss(model, ds, idx, grad);
            if (!std::isfinite(l)) {
                report.epoch_loss.push_back(l);
                throw DivergedError("train: non-finite loss in epoch " + std::to_string(epoch),
                                    report.epoch_loss);
            }
            epoch_sum += l * static_cast<double>(end - start);
            for (std::size_t i = 0; i < np; ++i) {
                velocity[i] = cfg.momentum * velocity[i] + grad[i];
                params[i] -= cfg.learning_rate * velocity[i];
            }
        }
        const double epoch_loss = epoch_sum / static_cast<double>(order.size());
        report.epoch_loss.push_back(epoch_loss);
        if (on_epoch) {
            on_epoch(epoch, epoch_loss);
        }
    }
    return report;
}

PoseParams predict_initial_pose(const RegressorModel& model, const DetectorImage& target,
                                const DetectorImage* reference) {
    const DetectorImage* ref = needs_reference(model.variant) ? reference : nullptr;
    return forward(model, build_input(model.variant, target, ref, model.pe_frequencies));
}

PoseParams predict_initial_pose(const RegressorModel& model, const DetectorImage& target,
                                const Volume& v, const CameraGeometry& cam,
                                const ProjectionConfig& proj) {
    if (!needs_reference(model.variant)) {
        return predict_initial_pose(model, target, nullptr);
    }
    ProjectionConfig cfg = proj;
    cfg.normalize_output = true;
    const DetectorImage reference = render_drr(v, PoseParams{}, cam, cfg);
    return predict_initial_pose(model, target, &reference);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char* kLayerNames[] = {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
                             "conv3.weight", "conv3.bias", "conv4.weight", "conv4.bias",
                             "fc.weight",    "fc.bias"};

}  // namespace

void save_model(const RegressorModel& model, const fs::path& path,
                const nlohmann::json& provenance) {
    nlohmann::json h;
    h["format"] = "poseinit-regressor";
    h["version"] = 1;
    h["variant"] = to_string(model.variant);
    h["in_channels"] = model.net.in_channels();
    h["pe_frequencies"] = model.pe_frequencies;
    h["range"] = model.range;
    h["seed"] = model.seed;
    h["architecture"] = {
        {"blocks", nn::PoseRegressorNet::kWidths},
        {"kernel", nn::PoseRegressorNet::kKernel},
        {"stride", nn::PoseRegressorNet::kStride},
        {"padding", nn::PoseRegressorNet::kPad},
        {"activation", "relu"},
        {"pool", "global_average"},
        {"fc", {nn::PoseRegressorNet::kWidths.back(), nn::PoseRegressorNet::kOutputs}},
        {"output", "tanh"}};
    nlohmann::json layers = nlohmann::json::array();
    const auto& segs = model.net.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        layers.push_back({{"name", kLayerNames[i]}, {"offset", segs[i].offset},
                          {"size", segs[i].size}});
    }
    h["layers"] = layers;
    h["parameter_count"] = model.net.parameter_count();
    h["payload"] = "float32-le";
    if (!provenance.empty()) {
        h["provenance"] = provenance;
    }

    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write model " + path.string());
    }
    out << h.dump() << '\n';
    const auto p = model.net.parameters();
    grid_io::write_f32_le(out, std::vector<float>(p.begin(), p.end()));
    if (!out) {
        throw IoError("write failed for model " + path.string());
    }
}

RegressorModel load_model(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("model " + path.string() + " has no header");
    }
    RegressorModel m;
    std::size_t count = 0;
    try {
        const auto h = nlohmann::json::parse(line);
        if (h.at("format").get<std::string>() != "poseinit-regressor") {
            throw IoError("model " + path.string() + " has an unknown format tag");
        }
        m.variant = initializer_variant_from_string(h.at("variant").get<std::string>());
        m.pe_frequencies = h.value("pe_frequencies", 1);
        m.range = h.at("range").get<PoseRange>();
        m.seed = h.at("seed").get<std::uint64_t>();
        count = h.at("parameter_count").get<std::size_t>();
        const int in_ch = h.at("in_channels").get<int>();
        if (in_ch != input_channels(m.variant, m.pe_frequencies)) {
            throw IoError("model " + path.string() + ": channel count does not match variant");
        }
        m.net = nn::PoseRegressorNet(in_ch);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed model header in " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError("invalid model header in " + path.string() + ": " + e.what());
    }
    if (count != m.net.parameter_count()) {
        throw IoError("model " + path.string() + ": parameter count does not match architecture");
    }
    const auto data = grid_io::read_f32_le(in, count);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError("model " + path.string() + ": trailing bytes after payload");
    }
    auto p = m.net.parameters();
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(data[i])) {
            throw IoError("model " + path.string() + ": non-finite weight");
        }
        p[i] = data[i];
    }
    return m;
}

void to_json(nlohmann::json& j, const TrainingConfig& c) {
    j = nlohmann::json{{"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"learning_rate", c.learning_rate},
                       {"momentum", c.momentum},
                       {"seed", c.seed},
                       {"n_train_samples", c.n_train_samples}};
}

void from_json(const nlohmann::json& j, TrainingConfig& c) {
    c = TrainingConfig{};
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.seed = j.value("seed", c.seed);
    c.n_train_samples = j.value("n_train_samples", c.n_train_samples);
}

}  // namespace poseinit
