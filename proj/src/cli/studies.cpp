#include "mrdl/cli/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mrdl/core/field_io.hpp"
#include "mrdl/core/kspace.hpp"
#include "mrdl/core/noise.hpp"
#include "mrdl/core/parallel.hpp"
#include "mrdl/core/rng.hpp"
#include "mrdl/metrics/metrics.hpp"
#include "mrdl/metrics/svg.hpp"
#include "mrdl/recon/recon.hpp"

namespace mrdl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- parameter helpers ----

std::size_t count(ParamReader& r, const std::string& key, std::size_t fallback, std::size_t min = 1) {
    const auto v = r.get<std::int64_t>(key, static_cast<std::int64_t>(fallback));
    if (v < static_cast<std::int64_t>(min)) r.fail(key, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

double number(ParamReader& r, const std::string& key, double fallback, double lo, double hi) {
    const double v = r.get<double>(key, fallback);
    if (!(v >= lo && v <= hi)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "must lie in [%g, %g]", lo, hi);
        r.fail(key, buf);
    }
    return v;
}

std::vector<std::size_t> counts(ParamReader& r, const std::string& key, const std::vector<std::size_t>& fallback) {
    std::vector<std::int64_t> def(fallback.begin(), fallback.end());
    const auto v = r.get<std::vector<std::int64_t>>(key, def);
    if (v.empty()) r.fail(key, "must not be empty");
    std::vector<std::size_t> out;
    for (auto x : v) {
        if (x < 1) r.fail(key, "entries must be >= 1");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

std::vector<double> levels(ParamReader& r, const std::string& key, const std::vector<double>& fallback) {
    const auto v = r.get<std::vector<double>>(key, fallback);
    if (v.empty()) r.fail(key, "must not be empty");
    for (double x : v)
        if (!(x >= 0.0 && x <= 1.0)) r.fail(key, "denoising levels must lie in [0, 1]");
    return v;
}

ModelSource parse_model_source(ParamReader& r) {
    ModelSource m;
    r.object("model", [&](ParamReader& mr) {
        m.checkpoint = mr.get<std::string>("checkpoint", "");
        mr.object("train", [&](ParamReader& tr) { m.train = parse_train_params(tr); });
    });
    return m;
}

// ---- output helpers ----

void say(const RunContext& ctx, const std::string& msg) {
    if (ctx.log) ctx.log(msg);
}

fs::path artifact(const RunContext& ctx, StudyOutput& out, const std::string& name) {
    out.artifacts.push_back(name);
    return ctx.out / name;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    f << j.dump(2) << '\n';
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

json roc_json(const observer::RocCurve& c) {
    return {{"auc", c.auc}, {"mean_auc", c.mean_auc}, {"std_auc", c.std_auc}, {"fold_aucs", c.fold_aucs}};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Sample variance of real and imaginary parts, each about its own mean, pooled.
double component_variance(const ComplexField& f, const Roi& roi) {
    double sr = 0, si = 0, s2 = 0;
    for (std::size_t y = roi.y0; y < roi.y0 + roi.height; ++y)
        for (std::size_t x = roi.x0; x < roi.x0 + roi.width; ++x) {
            const auto v = f.at(x, y);
            sr += v.real();
            si += v.imag();
            s2 += std::norm(v);
        }
    const double n = static_cast<double>(roi.count());
    return (s2 - (sr * sr + si * si) / n) / (2.0 * (n - 1.0));
}

double roi_std(const RealImage& img, const Roi& roi) {
    const auto v = img.extract(roi);
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Each panel mapped to [0, 1] on its own, then tiled.
RealImage tile(const std::vector<std::vector<const RealImage*>>& rows) {
    const Dims d = rows.front().front()->dims();
    std::size_t cols = 0;
    for (const auto& r : rows) cols = std::max(cols, r.size());
    RealImage out({cols * d.width, rows.size() * d.height});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const RealImage* p = rows[r][c];
            if (!p) continue;
            const auto [lo, hi] = std::minmax_element(p->values().begin(), p->values().end());
            const double span = *hi > *lo ? *hi - *lo : 1.0;
            for (std::size_t y = 0; y < d.height; ++y)
                for (std::size_t x = 0; x < d.width; ++x)
                    out.at(c * d.width + x, r * d.height + y) = (p->at(x, y) - *lo) / span;
        }
    return out;
}

ComplexField acquire(const ComplexField& object, std::size_t acquired, double sigma, std::uint64_t seed) {
    auto k = simulate_acquisition(object, acquired, acquired);
    if (sigma > 0.0) k = add_complex_gaussian_noise(k, {sigma, seed});
    return k;
}

class ModelHandle {
public:
    ModelHandle(const ModelSource& src, std::uint64_t seed, const RunContext& ctx, StudyOutput& out) {
        if (ctx.model) {
            ptr_ = ctx.model;
            return;
        }
        if (!src.checkpoint.empty()) {
            owned_ = model::load_checkpoint(src.checkpoint);
            out.summary["model"] = {{"checkpoint", src.checkpoint}};
        } else {
            say(ctx, "training model in-process");
            auto res = train_model(src.train, derive_seed(seed, {0x6d6f64656cull}));
            owned_ = std::move(res.model);
            model::save_checkpoint(ctx.out / "model", owned_);
            out.artifacts.push_back("model.json");
            out.artifacts.push_back("model.bin");
            out.summary["model"] = {{"trained_steps", res.loss_trace.size()}};
        }
        ptr_ = &owned_;
    }
    const model::DenoiseModel& get() const { return *ptr_; }

private:
    model::DenoiseModel owned_;
    const model::DenoiseModel* ptr_ = nullptr;
};

}  // namespace

// ---- parsing ----

TrainModelParams parse_train_params(ParamReader& r) {
    TrainModelParams p;
    r.object("architecture", [&](ParamReader& a) {
        p.arch.depth = count(a, "depth", p.arch.depth, 2);
        p.arch.kernel = count(a, "kernel", p.arch.kernel);
        if (p.arch.kernel % 2 == 0) a.fail("kernel", "must be odd");
        p.arch.hidden_channels = count(a, "hidden_channels", p.arch.hidden_channels);
        p.arch.output_gain = number(a, "output_gain", p.arch.output_gain, 1e-6, 10.0);
    });
    r.object("corpus", [&](ParamReader& c) {
        auto& cc = p.corpus;
        cc.patch = count(c, "patch", cc.patch, 8);
        cc.margin = count(c, "margin", cc.margin, 0);
        cc.min_trunc = number(c, "min_trunc", cc.min_trunc, 1e-3, 1.0);
        cc.max_trunc = number(c, "max_trunc", cc.max_trunc, cc.min_trunc, 1.0);
        cc.full_resolution_share = number(c, "full_resolution_share", cc.full_resolution_share, 0.0, 1.0);
        cc.min_noise = number(c, "min_noise", cc.min_noise, 0.0, 10.0);
        cc.max_noise = number(c, "max_noise", cc.max_noise, cc.min_noise, 10.0);
        cc.augmentations = c.get<std::vector<std::string>>("augmentations", cc.augmentations);
        for (const auto& op : cc.augmentations) {
            try {
                model::augment_op_from_string(op);
            } catch (const Error&) {
                c.fail("augmentations", "unknown augmentation '" + op + "'");
            }
        }
        cc.augment_probability = number(c, "augment_probability", cc.augment_probability, 0.0, 1.0);
    });
    p.train.iterations = count(r, "iterations", p.train.iterations);
    p.train.batch_size = count(r, "batch_size", p.train.batch_size);
    p.train.adam.learning_rate = number(r, "learning_rate", p.train.adam.learning_rate, 1e-9, 1.0);
    p.train.adam.beta1 = number(r, "beta1", p.train.adam.beta1, 0.0, 0.999999);
    p.train.adam.beta2 = number(r, "beta2", p.train.adam.beta2, 0.0, 0.999999999);
    p.train.adam.epsilon = number(r, "epsilon", p.train.adam.epsilon, 0.0, 1.0);
    p.train.normalize_scale = r.get<bool>("normalize_scale", p.train.normalize_scale);
    p.probe_sigmas = r.get<std::vector<double>>("probe_sigmas", p.probe_sigmas);
    for (double s : p.probe_sigmas)
        if (!(s > 0.0)) r.fail("probe_sigmas", "entries must be positive");
    return p;
}

SkeStudyParams parse_ske_params(ParamReader& r) {
    SkeStudyParams p;
    p.object_sizes = counts(r, "object_sizes", p.object_sizes);
    p.grid = count(r, "grid", p.grid, 8);
    p.noise_variance = number(r, "noise_variance", p.noise_variance, 1e-12, 1e12);
    p.realizations = count(r, "realizations", p.realizations, 4);
    p.roi = count(r, "roi", p.roi);
    p.groups = count(r, "groups", p.groups, 2);
    p.lambda_r = number(r, "lambda_r", p.lambda_r, 0.0, 1e6);
    const auto input = r.get<std::string>("input", observer::to_string(p.input));
    try {
        p.input = observer::observer_input_from_string(input);
    } catch (const Error&) {
        r.fail("input", "expected 'real' or 'magnitude'");
    }
    p.include_dl = r.get<bool>("include_dl", p.include_dl);
    p.denoising_level = number(r, "denoising_level", p.denoising_level, 0.0, 1.0);
    p.model = parse_model_source(r);

    if (p.roi > p.grid) r.fail("roi", "larger than the grid");
    if (p.realizations < 2 * p.groups) r.fail("realizations", "need at least two per bootstrap group");
    for (auto k : p.object_sizes) {
        if (k > p.roi) r.fail("object_sizes", "object larger than the ROI");
        auto spec = dro::SkeSpec::for_size(k);
        spec.grid = p.grid;
        spec.noise_variance = p.noise_variance;
        try {
            spec.validate();
        } catch (const Error& e) {
            r.fail("object_sizes", e.what());
        }
    }
    return p;
}

SnrAveragesParams parse_snr_params(ParamReader& r) {
    SnrAveragesParams p;
    p.averages = counts(r, "averages", p.averages);
    p.levels = levels(r, "levels", p.levels);
    p.size = count(r, "size", p.size, 16);
    p.acquired = count(r, "acquired", p.acquired, 4);
    if (p.acquired > p.size) r.fail("acquired", "must not exceed size");
    p.signal = number(r, "signal", p.signal, 1e-12, 1e12);
    p.noise_sigma = number(r, "noise_sigma", p.noise_sigma, 1e-12, 1e12);
    p.roi = count(r, "roi", p.roi, 2);
    if (2 * p.roi > p.size) r.fail("roi", "must fit inside the phantom disk");
    p.include_conventional = r.get<bool>("include_conventional", p.include_conventional);
    p.model = parse_model_source(r);
    return p;
}

SharpnessParams parse_sharpness_params(ParamReader& r) {
    SharpnessParams p;
    p.size = count(r, "size", p.size, 64);
    p.acquired = count(r, "acquired", p.acquired, 8);
    if (p.acquired > p.size) r.fail("acquired", "must not exceed size");
    p.noise_sigma = number(r, "noise_sigma", p.noise_sigma, 0.0, 1e6);
    p.levels = levels(r, "levels", p.levels);
    p.window = r.get<std::string>("window", p.window);
    if (p.window != "hann" && p.window != "rect") r.fail("window", "expected 'hann' or 'rect'");
    p.profile_half_length = count(r, "profile_half_length", p.profile_half_length, 2);
    if (p.profile_half_length > p.size / 8) r.fail("profile_half_length", "must be <= size / 8");
    p.model = parse_model_source(r);
    return p;
}

DenoiseLevelsParams parse_denoise_levels_params(ParamReader& r) {
    DenoiseLevelsParams p;
    p.size = count(r, "size", p.size, 64);
    p.acquired = count(r, "acquired", p.acquired, 8);
    if (p.acquired > p.size) r.fail("acquired", "must not exceed size");
    p.noise_sigma = number(r, "noise_sigma", p.noise_sigma, 0.0, 1e6);
    p.levels = levels(r, "levels", p.levels);
    p.model = parse_model_source(r);
    return p;
}

DiskGridParams parse_disk_grid_params(ParamReader& r) {
    DiskGridParams p;
    r.object("grid", [&](ParamReader& g) {
        const auto d = g.get<std::vector<int>>("diameters", p.grid.diameters);
        p.grid.diameters = d;
        p.grid.cnr_levels = g.get<std::vector<double>>("cnr_levels", p.grid.cnr_levels);
        p.grid.noise_sigma = number(g, "noise_sigma", p.grid.noise_sigma, 1e-12, 1e12);
        p.grid.cell_size = count(g, "cell_size", p.grid.cell_size, 4);
        p.grid.background = g.get<double>("background", p.grid.background);
        try {
            p.grid.validate();
        } catch (const Error& e) {
            g.fail("diameters", e.what());
        }
    });
    p.realizations = count(r, "realizations", p.realizations);
    p.denoising_level = number(r, "denoising_level", p.denoising_level, 0.0, 1.0);
    p.proxy_threshold = number(r, "proxy_threshold", p.proxy_threshold, 0.0, 1e6);
    p.responses_original = r.get<std::string>("responses_original", "");
    p.responses_dl = r.get<std::string>("responses_dl", "");
    p.model = parse_model_source(r);
    return p;
}

// ---- building blocks ----

SkeSamples ske_samples(const dro::SkeSpec& spec, std::size_t realizations, std::size_t roi_size,
                       observer::ObserverInput input, const model::DenoiseModel* model, double denoising_level,
                       std::uint64_t seed, std::size_t workers) {
    spec.validate();
    const Roi roi = Roi::centered({spec.grid, spec.grid}, roi_size, roi_size);
    const Roi local{0, 0, roi_size, roi_size};
    const auto n = static_cast<Eigen::Index>(realizations);
    const auto dim = static_cast<Eigen::Index>(roi.count());
    SkeSamples s;
    s.absent.resize(n, dim);
    s.present.resize(n, dim);
    if (model) {
        s.dl_absent.resize(n, dim);
        s.dl_present.resize(n, dim);
    }
    parallel_for(realizations, workers, [&](std::size_t i) {
        const auto pair = dro::generate_ske_pair(spec, dro::realization_seed(seed, i));
        const auto row = static_cast<Eigen::Index>(i);
        s.absent.row(row) = observer::roi_vector(pair.absent, roi, input).transpose();
        s.present.row(row) = observer::roi_vector(pair.present, roi, input).transpose();
        if (model) {
            const auto a = recon::dl_process_roi(pair.absent, *model, denoising_level, roi);
            const auto p = recon::dl_process_roi(pair.present, *model, denoising_level, roi);
            s.dl_absent.row(row) = observer::roi_vector(a, local, input).transpose();
            s.dl_present.row(row) = observer::roi_vector(p, local, input).transpose();
        }
    });
    return s;
}

std::vector<FlatNoiseProbe> probe_flat_noise(const model::DenoiseModel& model, std::span<const double> sigmas,
                                             double level, std::size_t reps, std::uint64_t seed) {
    const Dims d{64, 64};
    const Roi roi = Roi::centered(d, 32, 32);
    ComplexField flat(d, Domain::Image);
    for (auto& v : flat.samples()) v = 1.0;
    std::vector<FlatNoiseProbe> out;
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        FlatNoiseProbe p;
        p.sigma = sigmas[si];
        for (std::size_t r = 0; r < reps; ++r) {
            const auto s = model::synthesize_training_pair(flat, 1.0, p.sigma, derive_seed(seed, {si, r}));
            p.input_variance += component_variance(s.input, roi);
            p.output_variance += component_variance(recon::dl_process_image(s.input, model, level), roi);
        }
        p.reduction = 1.0 - p.output_variance / p.input_variance;
        p.input_variance /= static_cast<double>(reps);
        p.output_variance /= static_cast<double>(reps);
        out.push_back(p);
    }
    return out;
}

model::TrainResult train_model(const TrainModelParams& p, std::uint64_t seed,
                               const std::function<void(const model::LossPoint&)>& on_step) {
    const model::SyntheticCorpus corpus(p.corpus, derive_seed(seed, {1}));
    auto net = model::DenoiseModel::initialized(p.arch, derive_seed(seed, {2}));
    auto cfg = p.train;
    cfg.seed = seed;
    return model::train(std::move(net), [&](std::uint64_t i) { return corpus.sample(i); }, cfg, on_step);
}

// ---- studies ----

StudyOutput run_train_model(const TrainModelParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    const auto res = train_model(p, seed, [&](const model::LossPoint& lp) {
        if ((lp.step + 1) % 100 == 0) say(ctx, "step " + std::to_string(lp.step + 1) + " loss " + fmt("%.5f", lp.loss));
    });
    model::save_checkpoint(ctx.out / "model", res.model);
    out.artifacts.push_back("model.json");
    out.artifacts.push_back("model.bin");
    model::write_loss_trace(artifact(ctx, out, "loss.csv"), res.loss_trace);

    metrics::LinePlot plot{"training loss", "step", "L1 loss", {}};
    metrics::PlotSeries s{"loss", {}, {}, false};
    for (const auto& lp : res.loss_trace) {
        s.x.push_back(static_cast<double>(lp.step));
        s.y.push_back(lp.loss);
    }
    plot.series.push_back(std::move(s));
    metrics::write_svg(artifact(ctx, out, "loss.svg"), plot);

    const auto probes = probe_flat_noise(res.model, p.probe_sigmas, 1.0, 4, derive_seed(seed, {0x686f6c64ull}));
    json pj = json::array();
    for (const auto& pr : probes)
        pj.push_back({{"sigma", pr.sigma}, {"input_variance", pr.input_variance},
                      {"output_variance", pr.output_variance}, {"variance_reduction", pr.reduction}});

    double tail = 0;
    const std::size_t k = std::min<std::size_t>(50, res.loss_trace.size());
    for (std::size_t i = res.loss_trace.size() - k; i < res.loss_trace.size(); ++i) tail += res.loss_trace[i].loss;
    out.summary = {{"parameter_count", res.model.parameter_count()},
                   {"receptive_field", res.model.receptive_field()},
                   {"iterations", res.loss_trace.size()},
                   {"initial_loss", res.loss_trace.front().loss},
                   {"final_loss_mean_last_50", tail / static_cast<double>(k)},
                   {"flat_noise_probe_level_1", pj}};
    return out;
}

StudyOutput run_ske_study(const SkeStudyParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    std::optional<ModelHandle> model;
    if (p.include_dl) model.emplace(p.model, seed, ctx, out);

    observer::BootstrapConfig bc;
    bc.groups = p.groups;
    bc.lambda_r = p.lambda_r;
    bc.workers = ctx.workers;

    json sizes = json::array();
    for (auto k : p.object_sizes) {
        auto spec = dro::SkeSpec::for_size(k);
        spec.grid = p.grid;
        spec.noise_variance = p.noise_variance;
        say(ctx, "SKE object size " + std::to_string(k));
        const auto samples = ske_samples(spec, p.realizations, p.roi, p.input, model ? &model->get() : nullptr,
                                         p.denoising_level, derive_seed(seed, {k}), ctx.workers);
        const std::string tag = "k" + std::to_string(k);

        const auto orig = observer::bootstrap_auc(samples.absent, samples.present, bc);
        observer::write_fold_csv(artifact(ctx, out, "fold_auc_" + tag + "_original.csv"), orig.fold_aucs);
        observer::write_roc_csv(artifact(ctx, out, "roc_" + tag + "_original.csv"), orig);

        const double d_prime = spec.intensity * static_cast<double>(k) / std::sqrt(spec.noise_variance);
        json entry = {{"object_size", k},
                      {"intensity", spec.intensity},
                      {"binormal_reference_auc", normal_cdf(d_prime / std::sqrt(2.0))},
                      {"original", roc_json(orig)}};

        metrics::LinePlot plot{"ROC, object size " + std::to_string(k), "false positive fraction",
                               "true positive fraction", {}};
        auto add_curve = [&](const std::string& name, const observer::RocCurve& c) {
            metrics::PlotSeries s{name + fmt(" (AUC %.4f)", c.mean_auc), {}, {}, false};
            for (const auto& pt : c.points) {
                s.x.push_back(pt.fpr);
                s.y.push_back(pt.tpr);
            }
            plot.series.push_back(std::move(s));
        };
        add_curve("original", orig);

        if (model) {
            const auto dl = observer::bootstrap_auc(samples.dl_absent, samples.dl_present, bc);
            observer::write_fold_csv(artifact(ctx, out, "fold_auc_" + tag + "_dl.csv"), dl.fold_aucs);
            observer::write_roc_csv(artifact(ctx, out, "roc_" + tag + "_dl.csv"), dl);
            const auto t = observer::paired_ttest(dl.fold_aucs, orig.fold_aucs);
            const json tj = {{"t", t.t},         {"p", t.p},
                             {"dof", t.dof},     {"mean_difference", t.mean_difference},
                             {"degenerate", t.degenerate}, {"comparison", "dl minus original, paired by fold"}};
            write_json(artifact(ctx, out, "ttest_" + tag + ".json"), tj);
            entry["dl"] = roc_json(dl);
            entry["ttest"] = tj;
            add_curve("dl", dl);
        }
        metrics::write_svg(artifact(ctx, out, "roc_" + tag + ".svg"), plot);
        sizes.push_back(entry);
    }
    out.summary["sizes"] = sizes;
    out.summary["observer_input"] = observer::to_string(p.input);
    return out;
}

StudyOutput run_snr_averages(const SnrAveragesParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    const bool want_dl = !p.levels.empty();
    std::optional<ModelHandle> model;
    if (want_dl) model.emplace(p.model, seed, ctx, out);

    const Dims dims{p.size, p.size};
    ComplexField object(dims, Domain::Image);
    const double radius = 0.35 * static_cast<double>(p.size);
    const double c = static_cast<double>(p.size / 2);
    for (std::size_t y = 0; y < p.size; ++y)
        for (std::size_t x = 0; x < p.size; ++x)
            if (std::hypot(static_cast<double>(x) - c, static_cast<double>(y) - c) <= radius) object.at(x, y) = p.signal;
    const auto clean_k = simulate_acquisition(object, p.acquired, p.acquired);
    const Roi roi = Roi::centered(dims, p.roi, p.roi);
    const Roi local{0, 0, p.roi, p.roi};

    // slot [n][pipeline]; pipeline 0 is conventional, then one per level
    const std::size_t pipes = 1 + p.levels.size();
    std::vector<std::vector<metrics::SnrMeasurement>> results(p.averages.size(),
                                                              std::vector<metrics::SnrMeasurement>(pipes));
    parallel_for(p.averages.size(), ctx.workers, [&](std::size_t ai) {
        const std::size_t n = p.averages[ai];
        std::vector<RealImage> conv(2);
        std::vector<std::vector<RealImage>> dl(2, std::vector<RealImage>(p.levels.size()));
        for (std::size_t j = 0; j < 2; ++j) {
            ComplexField k = ComplexField::zeros(clean_k.dims(), Domain::KSpace);
            for (std::size_t r = 0; r < n; ++r)
                k += add_complex_gaussian_noise(clean_k, {p.noise_sigma, derive_seed(seed, {n, j, r})});
            k *= 1.0 / static_cast<double>(n);
            const auto img = interpolate_to_image(k, dims);
            conv[j] = magnitude(crop(img, roi));
            if (model) {
                const auto res = recon::cnn_forward_roi(model->get(), img, roi);
                for (std::size_t l = 0; l < p.levels.size(); ++l)
                    dl[j][l] = magnitude(recon::blend_residuals(crop(img, roi), res, p.levels[l]));
            }
        }
        results[ai][0] = metrics::snr_pair(conv[0], conv[1], local, n);
        for (std::size_t l = 0; l < p.levels.size(); ++l)
            results[ai][1 + l] = metrics::snr_pair(dl[0][l], dl[1][l], local, n);
    });

    std::vector<metrics::SnrSeriesRow> rows;
    json fits = json::array();
    metrics::LinePlot plot{"SNR versus averages", "averages", "SNR", {}};
    std::ofstream fit_csv(artifact(ctx, out, "snr_fit.csv"));
    fit_csv << "pipeline,level,alpha,rms_residual,exponent,r_squared\n";
    for (std::size_t pi = 0; pi < pipes; ++pi) {
        if (pi == 0 && !p.include_conventional) continue;
        const std::string name = pi == 0 ? "conventional" : "dl";
        const double level = pi == 0 ? 0.0 : p.levels[pi - 1];
        std::vector<metrics::SnrPoint> pts;
        for (std::size_t ai = 0; ai < p.averages.size(); ++ai) {
            rows.push_back({name, level, results[ai][pi]});
            pts.push_back({static_cast<double>(p.averages[ai]), results[ai][pi].snr});
        }
        const auto sq = metrics::fit_sqrt_law(pts);
        json fj = {{"pipeline", name}, {"level", level}, {"alpha", sq.alpha}, {"rms_residual", sq.rms_residual}};
        char buf[160];
        if (pts.size() >= 2 && p.averages.front() != p.averages.back()) {
            const auto pw = metrics::fit_power_law(pts);
            fj["exponent"] = pw.exponent;
            fj["r_squared"] = pw.r_squared;
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.9g,%.9g,%.9g,%.9g\n", name.c_str(), level, sq.alpha,
                          sq.rms_residual, pw.exponent, pw.r_squared);
        } else {
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.9g,%.9g,,\n", name.c_str(), level, sq.alpha, sq.rms_residual);
        }
        fit_csv << buf;
        fits.push_back(fj);

        const std::string label = pi == 0 ? name : name + fmt(" d=%.2f", level);
        metrics::PlotSeries meas{label, {}, {}, true}, curve{label + " fit", {}, {}, false};
        for (const auto& pt : pts) {
            meas.x.push_back(pt.averages);
            meas.y.push_back(pt.snr);
        }
        for (double n = 1.0; n <= static_cast<double>(p.averages.back()) + 1e-9; n += 0.25) {
            curve.x.push_back(n);
            curve.y.push_back(sq.alpha * std::sqrt(n));
        }
        plot.series.push_back(std::move(meas));
        plot.series.push_back(std::move(curve));
    }
    metrics::write_snr_csv(artifact(ctx, out, "snr.csv"), rows);
    metrics::write_svg(artifact(ctx, out, "snr.svg"), plot);
    out.summary["fits"] = fits;
    return out;
}

StudyOutput run_sharpness(const SharpnessParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    ModelHandle model(p.model, seed, ctx, out);
    metrics::ResolutionPhantomSpec ps;
    ps.size = p.size;
    ps.profile_half_length = p.profile_half_length;
    const auto phantom = metrics::make_resolution_phantom(ps);
    const auto k = acquire(phantom.image, p.acquired, p.noise_sigma, derive_seed(seed, {3}));
    const Dims dims{p.size, p.size};

    recon::ReconConfig raw_cfg;
    raw_cfg.output_dims = dims;
    const auto raw = recon::conventional_recon(k, raw_cfg).magnitude;
    auto conv_cfg = raw_cfg;
    conv_cfg.window = p.window == "hann" ? WindowSpec::hann() : WindowSpec::rect();
    const auto conv = recon::conventional_recon(k, conv_cfg).magnitude;

    std::ofstream csv(artifact(ctx, out, "sharpness.csv"));
    csv << "edge,pipeline,level,peak,peak_raw,ratio\n";
    char buf[160];
    auto emit = [&](std::size_t e, const char* pipe, const std::string& level, const metrics::SharpnessResult& r) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.9f,%.9f,%.9f\n", e, pipe, level.c_str(), r.peak_a, r.peak_b,
                      r.ratio);
        csv << buf;
    };

    double conv_sum = 0;
    for (std::size_t e = 0; e < phantom.edge_lines.size(); ++e) {
        const auto r = metrics::edge_sharpness(conv, raw, phantom.edge_lines[e]);
        emit(e, p.window.c_str(), "", r);
        conv_sum += r.ratio;
    }
    const double conv_mean = conv_sum / static_cast<double>(phantom.edge_lines.size());

    write_png(artifact(ctx, out, "raw.png"), raw);
    write_png(artifact(ctx, out, p.window + ".png"), conv);
    json dl = json::array();
    double dl_total = 0;
    const auto image = interpolate_to_image(k, dims);
    const auto res = model::cnn_forward(model.get(), image);
    for (double level : p.levels) {
        const auto img = magnitude(recon::blend_residuals(image, res, level));
        double sum = 0;
        for (std::size_t e = 0; e < phantom.edge_lines.size(); ++e) {
            const auto r = metrics::edge_sharpness(img, raw, phantom.edge_lines[e]);
            emit(e, "dl", fmt("%.2f", level), r);
            sum += r.ratio;
        }
        const double mean = sum / static_cast<double>(phantom.edge_lines.size());
        dl.push_back({{"level", level}, {"mean_ratio", mean}});
        dl_total += mean;
        write_png(artifact(ctx, out, "dl" + fmt("_d%.2f", level) + ".png"), img);
    }
    const double dl_mean = dl_total / static_cast<double>(p.levels.size());
    out.summary = {{"conventional_window", p.window},
                   {"conventional_mean_ratio", conv_mean},
                   {"dl", dl},
                   {"dl_mean_ratio", dl_mean},
                   {"dl_sharper_than_conventional", dl_mean > conv_mean},
                   {"reference_production_ratio", 1.6}};
    return out;
}

StudyOutput run_denoise_levels(const DenoiseLevelsParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    ModelHandle model(p.model, seed, ctx, out);
    metrics::ResolutionPhantomSpec ps;
    ps.size = p.size;
    const auto phantom = metrics::make_resolution_phantom(ps);
    const auto k = acquire(phantom.image, p.acquired, p.noise_sigma, derive_seed(seed, {4}));
    const Dims dims{p.size, p.size};
    const auto image = interpolate_to_image(k, dims);
    const auto raw = magnitude(image);
    const auto res = model::cnn_forward(model.get(), image);

    std::vector<RealImage> outs, diffs;
    std::ofstream csv(artifact(ctx, out, "levels.csv"));
    csv << "level,flat_std_raw,flat_std_dl,variance_reduction\n";
    const double raw_std = roi_std(raw, phantom.flat);
    json levels_j = json::array();
    char buf[128];
    for (double level : p.levels) {
        auto img = magnitude(recon::blend_residuals(image, res, level));
        RealImage diff(dims);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = raw[i] - img[i];
        const double s = roi_std(img, phantom.flat);
        const double red = 1.0 - (s * s) / (raw_std * raw_std);
        std::snprintf(buf, sizeof buf, "%.4f,%.9f,%.9f,%.9f\n", level, raw_std, s, red);
        csv << buf;
        levels_j.push_back({{"level", level}, {"flat_std", s}, {"variance_reduction", red}});
        write_png(artifact(ctx, out, "dl" + fmt("_d%.2f", level) + ".png"), img);
        write_png(artifact(ctx, out, "diff" + fmt("_d%.2f", level) + ".png"), diff);
        outs.push_back(std::move(img));
        diffs.push_back(std::move(diff));
    }
    write_png(artifact(ctx, out, "raw.png"), raw);

    std::vector<const RealImage*> top{&raw}, bottom{nullptr};
    for (std::size_t i = 0; i < outs.size(); ++i) {
        top.push_back(&outs[i]);
        bottom.push_back(&diffs[i]);
    }
    write_png(artifact(ctx, out, "grid.png"), tile({top, bottom}));
    out.summary = {{"flat_std_raw", raw_std}, {"levels", levels_j}};
    return out;
}

StudyOutput run_disk_grid(const DiskGridParams& p, std::uint64_t seed, const RunContext& ctx) {
    StudyOutput out;
    ModelHandle model(p.model, seed, ctx, out);
    const auto truth = dro::layout_disk_grid(p.grid);
    dro::write_ground_truth(artifact(ctx, out, "truth.json"), truth);

    std::vector<std::vector<metrics::DetectionResponse>> orig(p.realizations), dl(p.realizations);
    std::vector<RealImage> first(2);
    parallel_for(p.realizations, ctx.workers, [&](std::size_t r) {
        const auto g = dro::generate_disk_grid(p.grid, dro::realization_seed(seed, r));
        const auto a = magnitude(g.image);
        const auto b = magnitude(recon::dl_process_image(g.image, model.get(), p.denoising_level));
        orig[r] = metrics::matched_filter_proxy(a, g.truth, r, p.proxy_threshold);
        dl[r] = metrics::matched_filter_proxy(b, g.truth, r, p.proxy_threshold);
        if (r == 0) first = {a, b};
    });
    auto flatten = [](const std::vector<std::vector<metrics::DetectionResponse>>& v) {
        std::vector<metrics::DetectionResponse> f;
        for (const auto& x : v) f.insert(f.end(), x.begin(), x.end());
        return f;
    };
    auto ro = flatten(orig), rd = flatten(dl);
    std::string source_o = "matched-filter proxy", source_d = source_o;
    if (!p.responses_original.empty()) {
        ro = metrics::read_responses(p.responses_original);
        source_o = "reader file " + p.responses_original;
    } else {
        metrics::write_responses(artifact(ctx, out, "responses_original.json"), ro);
    }
    if (!p.responses_dl.empty()) {
        rd = metrics::read_responses(p.responses_dl);
        source_d = "reader file " + p.responses_dl;
    } else {
        metrics::write_responses(artifact(ctx, out, "responses_dl.json"), rd);
    }
    const auto to = metrics::detection_probability(ro, truth);
    const auto td = metrics::detection_probability(rd, truth);
    metrics::write_detection_csv(artifact(ctx, out, "detection_original.csv"), to);
    metrics::write_detection_csv(artifact(ctx, out, "detection_dl.csv"), td);
    const auto diff = metrics::difference_table(td, to);
    metrics::write_difference_csv(artifact(ctx, out, "detection_difference.csv"), diff);
    write_png(artifact(ctx, out, "realization0_original.png"), first[0]);
    write_png(artifact(ctx, out, "realization0_dl.png"), first[1]);

    // Smallest CNR at which the one-pixel disk is found in at least 90% of trials.
    auto rose = [](const metrics::DetectionTable& t) -> json {
        const auto it = std::find(t.diameters.begin(), t.diameters.end(), 1);
        if (it == t.diameters.end()) return nullptr;
        const auto di = static_cast<std::size_t>(it - t.diameters.begin());
        for (std::size_t c = 0; c < t.cnr_levels.size(); ++c)
            if (t.at(di, c).trials > 0 && t.at(di, c).probability() >= 0.9) return t.cnr_levels[c];
        return nullptr;
    };
    double mean_diff = 0;
    for (const auto& d : diff) mean_diff += d.difference / static_cast<double>(diff.size());
    out.summary = {{"responses_original", source_o},
                   {"responses_dl", source_d},
                   {"mean_probability_difference", mean_diff},
                   {"single_pixel_cnr_for_90pct_original", rose(to)},
                   {"single_pixel_cnr_for_90pct_dl", rose(td)},
                   {"rose_reference_cnr", metrics::kRoseThreshold}};
    return out;
}

// ---- dispatcher ----

namespace {

struct Parsed {
    json resolved;
    std::function<StudyOutput(const RunContext&)> run;
};

Parsed parse(const ExperimentConfig& cfg) {
    ParamReader r(cfg.params, "params");
    Parsed out;
    const auto seed = cfg.seed;
    try {
        switch (cfg.kind) {
            case ExperimentKind::TrainModel: {
                auto p = parse_train_params(r);
                out.run = [p, seed](const RunContext& c) { return run_train_model(p, seed, c); };
                break;
            }
            case ExperimentKind::SkeObserverStudy: {
                auto p = parse_ske_params(r);
                out.run = [p, seed](const RunContext& c) { return run_ske_study(p, seed, c); };
                break;
            }
            case ExperimentKind::SnrAverages: {
                auto p = parse_snr_params(r);
                out.run = [p, seed](const RunContext& c) { return run_snr_averages(p, seed, c); };
                break;
            }
            case ExperimentKind::Sharpness: {
                auto p = parse_sharpness_params(r);
                out.run = [p, seed](const RunContext& c) { return run_sharpness(p, seed, c); };
                break;
            }
            case ExperimentKind::DenoiseLevels: {
                auto p = parse_denoise_levels_params(r);
                out.run = [p, seed](const RunContext& c) { return run_denoise_levels(p, seed, c); };
                break;
            }
            case ExperimentKind::DiskGridStudy: {
                auto p = parse_disk_grid_params(r);
                out.run = [p, seed](const RunContext& c) { return run_disk_grid(p, seed, c); };
                break;
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }
    r.finish();
    out.resolved = {{"kind", to_string(cfg.kind)}, {"seed", cfg.seed}, {"params", r.resolved()}};
    return out;
}

}  // namespace

json resolve_config(const ExperimentConfig& cfg) { return parse(cfg).resolved; }

StudyOutput run_experiment(const ExperimentConfig& cfg, const RunContext& ctx) {
    const auto parsed = parse(cfg);
    fs::create_directories(ctx.out);
    auto out = parsed.run(ctx);

    const std::string hash = hex64(fnv1a(parsed.resolved.dump()));
    out.summary["kind"] = to_string(cfg.kind);
    out.summary["config_hash"] = hash;
    write_json(ctx.out / "summary.json", out.summary);
    out.artifacts.push_back("summary.json");

    const json manifest = {{"software", kSoftwareName},
                           {"version", kVersion},
                           {"config_hash", hash},
                           {"config", parsed.resolved},
                           {"rerun", "mrdl run --config manifest.json"},
                           {"artifacts", out.artifacts}};
    write_json(ctx.out / "manifest.json", manifest);
    return out;
}

}  // namespace mrdl::cli
