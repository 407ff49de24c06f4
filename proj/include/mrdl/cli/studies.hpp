#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrdl/cli/config.hpp"
#include "mrdl/dro/dro.hpp"
#include "mrdl/model/training.hpp"
#include "mrdl/observer/observer.hpp"

namespace mrdl::cli {

struct RunContext {
    std::filesystem::path out;  // created on demand
    std::size_t workers = 0;
    std::function<void(const std::string&)> log;
    const model::DenoiseModel* model = nullptr;  // when set, DL studies use it instead of params.model
};

struct StudyOutput {
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> artifacts;  // relative to RunContext::out
};

// ---- Parameters ----------------------------------------------------------

struct TrainModelParams {
    model::Architecture arch;
    model::CorpusConfig corpus;
    model::TrainConfig train;
    std::vector<double> probe_sigmas{0.02, 0.05, 0.1, 0.2};
};

/// Where a DL study gets its network: a saved checkpoint, or a model trained
/// in-process from `train` when `checkpoint` is empty.
struct ModelSource {
    std::string checkpoint;
    TrainModelParams train;
};

struct SkeStudyParams {
    std::vector<std::size_t> object_sizes{1, 2, 4};
    std::size_t grid = 120;
    double noise_variance = 1.41;
    std::size_t realizations = 4096;
    std::size_t roi = 16;
    std::size_t groups = 8;
    double lambda_r = 1e-4;
    observer::ObserverInput input = observer::ObserverInput::Real;
    bool include_dl = true;
    double denoising_level = 0.75;
    ModelSource model;
};

struct SnrAveragesParams {
    std::vector<std::size_t> averages{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    std::vector<double> levels{0.0, 0.25, 0.5, 0.75};
    std::size_t size = 96;
    std::size_t acquired = 96;
    double signal = 50.0;
    double noise_sigma = 5.0;  // per component, single average
    std::size_t roi = 24;
    bool include_conventional = true;
    ModelSource model;
};

struct SharpnessParams {
    std::size_t size = 128;
    std::size_t acquired = 64;
    double noise_sigma = 0.0;
    std::vector<double> levels{0.3, 0.75, 1.0};
    std::string window = "hann";
    std::size_t profile_half_length = 10;
    ModelSource model;
};

struct DenoiseLevelsParams {
    std::size_t size = 128;
    std::size_t acquired = 96;
    double noise_sigma = 0.08;
    std::vector<double> levels{0.30, 0.75, 1.0};
    ModelSource model;
};

struct DiskGridParams {
    dro::DiskGridSpec grid;
    std::size_t realizations = 8;
    double denoising_level = 0.75;
    double proxy_threshold = 5.0;
    std::string responses_original;  // optional reader response files
    std::string responses_dl;
    ModelSource model;
};

TrainModelParams parse_train_params(ParamReader& r);
SkeStudyParams parse_ske_params(ParamReader& r);
SnrAveragesParams parse_snr_params(ParamReader& r);
SharpnessParams parse_sharpness_params(ParamReader& r);
DenoiseLevelsParams parse_denoise_levels_params(ParamReader& r);
DiskGridParams parse_disk_grid_params(ParamReader& r);

// ---- Building blocks shared with tests ----------------------------------

struct SkeSamples {
    observer::Matrix absent, present;        // original images, one ROI vector per row
    observer::Matrix dl_absent, dl_present;  // empty when no model is given
};

/// Realization i of the study draws dro::generate_ske_pair(spec, realization_seed(seed, i)).
SkeSamples ske_samples(const dro::SkeSpec& spec, std::size_t realizations, std::size_t roi_size,
                       observer::ObserverInput input, const model::DenoiseModel* model, double denoising_level,
                       std::uint64_t seed, std::size_t workers);

struct FlatNoiseProbe {
    double sigma = 0.0;
    double input_variance = 0.0;
    double output_variance = 0.0;
    double reduction = 0.0;  // 1 - output / input
};

/// Held-out flat images (value 1) with white complex noise of each sigma,
/// processed at `level`; variances from the central half of the frame.
std::vector<FlatNoiseProbe> probe_flat_noise(const model::DenoiseModel& model, std::span<const double> sigmas,
                                             double level, std::size_t reps, std::uint64_t seed);

model::TrainResult train_model(const TrainModelParams& p, std::uint64_t seed,
                               const std::function<void(const model::LossPoint&)>& on_step = {});

// ---- Studies ------------------------------------------------------------

StudyOutput run_train_model(const TrainModelParams& p, std::uint64_t seed, const RunContext& ctx);
StudyOutput run_ske_study(const SkeStudyParams& p, std::uint64_t seed, const RunContext& ctx);
StudyOutput run_snr_averages(const SnrAveragesParams& p, std::uint64_t seed, const RunContext& ctx);
StudyOutput run_sharpness(const SharpnessParams& p, std::uint64_t seed, const RunContext& ctx);
StudyOutput run_denoise_levels(const DenoiseLevelsParams& p, std::uint64_t seed, const RunContext& ctx);
StudyOutput run_disk_grid(const DiskGridParams& p, std::uint64_t seed, const RunContext& ctx);

/// Validates params, runs the study and writes summary.json and manifest.json
/// (software version, resolved config, config hash, artifact list) into ctx.out.
StudyOutput run_experiment(const ExperimentConfig& cfg, const RunContext& ctx);

/// Resolved config ({kind, seed, params} with every default filled in).
nlohmann::json resolve_config(const ExperimentConfig& cfg);

}  // namespace mrdl::cli
