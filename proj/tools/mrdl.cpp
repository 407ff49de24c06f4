// mrdl: command-line front end for the simulation, reconstruction and
// image-quality studies.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrdl/cli/config.hpp"
#include "mrdl/cli/studies.hpp"
#include "mrdl/core/field_io.hpp"
#include "mrdl/core/kspace.hpp"
#include "mrdl/dro/dro.hpp"
#include "mrdl/metrics/metrics.hpp"
#include "mrdl/recon/recon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrdl;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool verbose = false;
};

fs::path output_root() {
    if (const char* env = std::getenv("MRDL_OUTPUT_ROOT"); env && *env) return env;
    return "mrdl-out";
}

cli::RunContext make_context(const Common& c, const fs::path& out, std::size_t workers) {
    cli::RunContext ctx;
    ctx.out = out;
    ctx.workers = workers;
    if (c.verbose) ctx.log = [](const std::string& m) { std::cerr << "[mrdl] " << m << '\n'; };
    return ctx;
}

int run_config(cli::ExperimentConfig cfg, const Common& c) {
    if (c.seed) cfg.seed = *c.seed;
    if (c.workers) cfg.workers = *c.workers;
    const auto resolved = cli::resolve_config(cfg);  // validates before anything is written
    fs::path out;
    if (!c.out.empty())
        out = c.out;
    else if (cfg.output)
        out = fs::path(*cfg.output).is_absolute() ? fs::path(*cfg.output) : output_root() / *cfg.output;
    else
        out = output_root() / (std::string(cli::to_string(cfg.kind)) + "-" +
                               cli::hex64(cli::fnv1a(resolved.dump())).substr(0, 8));
    const auto result = cli::run_experiment(cfg, make_context(c, out, cfg.workers));
    std::cout << result.summary.dump(2) << '\n' << "artifacts in " << out.string() << '\n';
    return 0;
}

cli::ExperimentConfig config_of_kind(const Common& c, cli::ExperimentKind kind) {
    cli::ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = cli::read_experiment_config(c.config);
        if (cfg.kind != kind)
            throw ConfigError(std::string("config kind is ") + cli::to_string(cfg.kind) + ", expected " +
                              cli::to_string(kind));
    }
    cfg.kind = kind;
    return cfg;
}

fs::path plain_out(const Common& c, const char* fallback) {
    const fs::path out = c.out.empty() ? output_root() / fallback : fs::path(c.out);
    fs::create_directories(out);
    return out;
}

template <class T, std::size_t N>
std::array<T, N> parse_tuple(const std::string& s, const char* what) {
    std::array<T, N> v{};
    std::stringstream ss(s);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= N) break;
        try {
            if constexpr (std::is_floating_point_v<T>)
                v[i++] = static_cast<T>(std::stod(part));
            else
                v[i++] = static_cast<T>(std::stoull(part));
        } catch (const std::exception&) {
            throw ConfigError(std::string("cannot parse ") + what + " '" + s + "'");
        }
    }
    if (i != N) throw ConfigError(std::string(what) + " needs " + std::to_string(N) + " comma-separated values");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRI reconstruction simulation and image-quality studies"};
    app.set_version_flag("--version", cli::kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    app.add_option("--config", c.config, "Experiment config (JSON)");
    app.add_option("--out", c.out, "Output directory (default: $MRDL_OUTPUT_ROOT or ./mrdl-out)");
    app.add_option("--seed", c.seed, "Override the config seed");
    app.add_option("--workers", c.workers, "Worker threads (0: all cores)");
    app.add_flag("--verbose,-v", c.verbose, "Progress on stderr");

    auto* run = app.add_subcommand("run", "Run a full experiment config");

    auto* train = app.add_subcommand("train", "Train a denoising model (TrainModel config optional)");
    std::optional<std::size_t> iterations;
    train->add_option("--iterations", iterations, "Override the iteration count");

    auto* gen = app.add_subcommand("gen-dro", "Generate digital reference objects");
    std::string dro_type = "ske";
    std::size_t ske_size = 1, dro_count = 1, acquire = 0;
    gen->add_option("--type", dro_type, "ske or disks")->check(CLI::IsMember({"ske", "disks"}));
    gen->add_option("--object-size", ske_size, "SKE object size (1, 2 or 4)");
    gen->add_option("--count", dro_count, "Number of realizations");
    gen->add_option("--acquire", acquire, "Also write an N x N k-space acquisition of each image");

    auto* rec = app.add_subcommand("recon", "Reconstruct a k-space field");
    std::string rec_input, rec_mode = "conventional", rec_window = "rect", rec_model, rec_size;
    double rec_level = 0.75, rec_taper = 0.0;
    rec->add_option("--input", rec_input, "K-space field (.json/.f32 stem)")->required();
    rec->add_option("--mode", rec_mode, "conventional or deep_learning");
    rec->add_option("--window", rec_window, "rect, hann, tukey or fermi");
    rec->add_option("--taper", rec_taper, "Tukey fraction or Fermi width");
    rec->add_option("--level", rec_level, "Denoising level in [0, 1]");
    rec->add_option("--model", rec_model, "Model checkpoint stem");
    rec->add_option("--size", rec_size, "Output matrix W,H");

    auto* obs = app.add_subcommand("observe", "SKE observer study (SkeObserverStudy config optional)");
    std::optional<std::size_t> obs_realizations;
    std::string obs_model;
    bool obs_no_dl = false;
    obs->add_option("--realizations", obs_realizations, "Realizations per object size");
    obs->add_option("--model", obs_model, "Model checkpoint stem");
    obs->add_flag("--no-dl", obs_no_dl, "Original images only");

    auto* met = app.add_subcommand("metrics", "Single measurements on saved fields or response files");
    std::string measure, ma, mb, mroi, mline, mresp, mresp_b, mtruth;
    met->add_option("measure", measure, "snr, sharpness or detection")
        ->required()
        ->check(CLI::IsMember({"snr", "sharpness", "detection"}));
    met->add_option("--a", ma, "First image field");
    met->add_option("--b", mb, "Second image field");
    met->add_option("--roi", mroi, "x,y,w,h");
    met->add_option("--line", mline, "x0,y0,x1,y1");
    met->add_option("--responses", mresp, "Response file (JSON)");
    met->add_option("--responses-b", mresp_b, "Second response file for a difference table");
    met->add_option("--truth", mtruth, "Ground-truth map (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) {
            if (c.config.empty()) throw ConfigError("run needs --config");
            return run_config(cli::read_experiment_config(c.config), c);
        }
        if (train->parsed()) {
            auto cfg = config_of_kind(c, cli::ExperimentKind::TrainModel);
            if (iterations) cfg.params["iterations"] = *iterations;
            return run_config(cfg, c);
        }
        if (obs->parsed()) {
            auto cfg = config_of_kind(c, cli::ExperimentKind::SkeObserverStudy);
            if (obs_realizations) cfg.params["realizations"] = *obs_realizations;
            if (!obs_model.empty()) cfg.params["model"] = {{"checkpoint", obs_model}};
            if (obs_no_dl) cfg.params["include_dl"] = false;
            return run_config(cfg, c);
        }
        if (gen->parsed()) {
            const auto out = plain_out(c, "dro");
            const std::uint64_t seed = c.seed.value_or(0);
            json index = json::array();
            for (std::size_t i = 0; i < dro_count; ++i) {
                const auto rs = dro::realization_seed(seed, i);
                std::vector<std::pair<std::string, ComplexField>> images;
                if (dro_type == "ske") {
                    const auto pair = dro::generate_ske_pair(dro::SkeSpec::for_size(ske_size), rs);
                    images = {{"ske_present_" + std::to_string(i), pair.present},
                              {"ske_absent_" + std::to_string(i), pair.absent}};
                } else {
                    const auto g = dro::generate_disk_grid(dro::DiskGridSpec{}, rs);
                    if (i == 0) dro::write_ground_truth(out / "truth.json", g.truth);
                    images = {{"disks_" + std::to_string(i), g.image}};
                }
                for (const auto& [name, img] : images) {
                    write_field(out / name, img);
                    write_png(out / (name + ".png"), magnitude(img));
                    if (acquire > 0) write_field(out / (name + "_kspace"), simulate_acquisition(img, acquire, acquire));
                    index.push_back(name);
                }
            }
            std::cout << json{{"type", dro_type}, {"seed", seed}, {"fields", index}}.dump(2) << '\n';
            return 0;
        }
        if (rec->parsed()) {
            const auto out = plain_out(c, "recon");
            const auto k = read_field(rec_input);
            recon::ReconConfig cfg;
            cfg.mode = recon::recon_mode_from_string(rec_mode);
            cfg.window = {window_kind_from_string(rec_window), rec_taper};
            if (cfg.window.kind == WindowKind::Hann) cfg.window = WindowSpec::hann();
            cfg.denoising_level = rec_level;
            if (!rec_size.empty()) {
                const auto wh = parse_tuple<std::size_t, 2>(rec_size, "--size");
                cfg.output_dims = {wh[0], wh[1]};
            }
            std::optional<model::DenoiseModel> net;
            if (cfg.mode == recon::ReconMode::DeepLearning) {
                if (rec_model.empty()) throw ConfigError("deep_learning recon needs --model");
                net = model::load_checkpoint(rec_model);
            }
            const auto res = recon::reconstruct(k, cfg, net ? &*net : nullptr);
            write_field(out / "recon", res.image);
            write_png(out / "recon.png", res.magnitude);
            std::cout << "wrote " << (out / "recon.json").string() << '\n';
            return 0;
        }
        if (met->parsed()) {
            const auto out = plain_out(c, "metrics");
            json result;
            if (measure == "snr" || measure == "sharpness") {
                if (ma.empty() || mb.empty()) throw ConfigError(measure + " needs --a and --b");
                const auto a = magnitude(read_field(ma)), b = magnitude(read_field(mb));
                if (measure == "snr") {
                    if (mroi.empty()) throw ConfigError("snr needs --roi");
                    const auto r = parse_tuple<std::size_t, 4>(mroi, "--roi");
                    const auto m = metrics::snr_pair(a, b, Roi{r[0], r[1], r[2], r[3]});
                    result = {{"signal", m.signal}, {"sigma", m.sigma}, {"snr", m.snr}};
                } else {
                    if (mline.empty()) throw ConfigError("sharpness needs --line");
                    const auto l = parse_tuple<double, 4>(mline, "--line");
                    const auto s = metrics::edge_sharpness(a, b, {l[0], l[1], l[2], l[3]});
                    result = {{"peak_a", s.peak_a}, {"peak_b", s.peak_b}, {"ratio", s.ratio}};
                }
            } else {
                if (mresp.empty() || mtruth.empty()) throw ConfigError("detection needs --responses and --truth");
                const auto truth = dro::read_ground_truth(mtruth);
                const auto ta = metrics::detection_probability(metrics::read_responses(mresp), truth);
                metrics::write_detection_csv(out / "detection.csv", ta);
                result = {{"table", (out / "detection.csv").string()}};
                if (!mresp_b.empty()) {
                    const auto tb = metrics::detection_probability(metrics::read_responses(mresp_b), truth);
                    metrics::write_detection_csv(out / "detection_b.csv", tb);
                    metrics::write_difference_csv(out / "detection_difference.csv", metrics::difference_table(ta, tb));
                    result["difference"] = (out / "detection_difference.csv").string();
                }
            }
            std::ofstream(out / (measure + ".json")) << result.dump(2) << '\n';
            std::cout << result.dump(2) << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "mrdl: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mrdl: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
