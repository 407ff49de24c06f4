#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mrdl/core/field.hpp"
#include "mrdl/model/network.hpp"

namespace mrdl::model {

struct Provenance {
    double trunc_fraction = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> augmentations;
};

/// input == clean + target_ring + target_noise, evaluated in that order, holds
/// bit-for-bit for every sample produced by this module.
struct TrainSample {
    ComplexField clean;
    ComplexField input;
    ComplexField target_ring;
    ComplexField target_noise;
    Provenance provenance;
};

/// Degrades a clean image the way a low-resolution noisy acquisition would:
/// keep the central trunc_fraction of k-space along each axis, add complex
/// white noise to the kept samples, zero-fill back to full size. noise_sigma
/// is the resulting per-component std in the image domain.
TrainSample synthesize_training_pair(const ComplexField& clean, double trunc_fraction, double noise_sigma,
                                     std::uint64_t seed);

enum class AugmentOp { Rot90, FlipH, FlipV, IntensityRamp, PhaseRamp, ExtraNoise };

AugmentOp augment_op_from_string(const std::string& name);
std::string to_string(AugmentOp op);

struct AugmentStep {
    AugmentOp op;
    int quarter_turns = 1;       // Rot90
    double ramp_x = 0.0;         // IntensityRamp: gain 1 + ramp_x * u + ramp_y * v, u, v in [-1, 1]
    double ramp_y = 0.0;
    double phase0 = 0.0;         // PhaseRamp: phase0 + phase_x * u + phase_y * v (radians)
    double phase_x = 0.0;
    double phase_y = 0.0;
    double extra_sigma = 0.0;    // ExtraNoise
};

/// Applies each step coherently to clean and both targets and rebuilds the
/// input. Extra noise lands in target_noise (and therefore the input) only.
TrainSample augment(const TrainSample& sample, const std::vector<AugmentStep>& steps, std::uint64_t seed);

/// Parses op names ("rot90", "flip_h", ...) and draws their parameters from `seed`.
std::vector<AugmentStep> random_augmentations(const std::vector<std::string>& ops, std::uint64_t seed,
                                              double max_extra_sigma);

/// Procedural clean images: smooth blobs, hard-edged polygons and disks,
/// ramps, band-limited texture and empty background, mixed at random.
ComplexField random_clean_image(Dims dims, std::uint64_t seed);

struct CorpusConfig {
    std::size_t patch = 48;
    std::size_t margin = 16;  // synthesis canvas border, cropped away so periodic wrap stays out of the patch
    double min_trunc = 0.4;
    double max_trunc = 0.9;
    double full_resolution_share = 0.3;  // fraction of samples with trunc_fraction = 1
    double min_noise = 0.005;            // relative to the clean image's peak magnitude
    double max_noise = 0.5;
    std::vector<std::string> augmentations{"rot90", "flip_h", "flip_v", "intensity_ramp", "phase_ramp",
                                           "extra_noise"};
    double augment_probability = 0.5;
};

/// Deterministic stream of samples: sample i depends only on (seed, i).
class SyntheticCorpus {
public:
    SyntheticCorpus(CorpusConfig cfg, std::uint64_t seed);
    TrainSample sample(std::uint64_t index) const;
    const CorpusConfig& config() const { return cfg_; }

private:
    CorpusConfig cfg_;
    std::uint64_t seed_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    AdamConfig adam;
    std::size_t iterations = 1000;
    std::size_t batch_size = 4;
    std::uint64_t seed = 0;
    bool normalize_scale = true;  // divide each sample by its input RMS before the loss
};

struct LossPoint {
    std::size_t step = 0;
    double loss = 0.0;
};

/// Mean absolute error over both residual heads and both components.
template <class Real>
double residual_l1_loss(const Matrix<Real>& prediction, const Matrix<Real>& target) {
    return static_cast<double>((prediction - target).cwiseAbs().sum()) / static_cast<double>(prediction.size());
}

/// 4 x HW target matrix (ring re, ring im, noise re, noise im).
template <class Real>
Matrix<Real> target_matrix(const TrainSample& s) {
    const auto n = static_cast<Eigen::Index>(s.input.size());
    Matrix<Real> t(4, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        t(0, i) = static_cast<Real>(s.target_ring[idx].real());
        t(1, i) = static_cast<Real>(s.target_ring[idx].imag());
        t(2, i) = static_cast<Real>(s.target_noise[idx].real());
        t(3, i) = static_cast<Real>(s.target_noise[idx].imag());
    }
    return t;
}

/// Loss and weight gradients for one sample.
template <class Real>
double loss_and_gradient(const BasicDenoiseModel<Real>& model, const TrainSample& sample,
                         std::vector<Matrix<Real>>* grads) {
    typename BasicDenoiseModel<Real>::Trace trace;
    const auto out = model.forward(to_feature_map<Real>(sample.input), grads ? &trace : nullptr);
    const Matrix<Real> target = target_matrix<Real>(sample);
    const double loss = residual_l1_loss(out.data, target);
    if (grads) {
        const Real scale = Real(1) / static_cast<Real>(out.data.size());
        const Matrix<Real> diff = out.data - target;
        const Matrix<Real> g = diff.unaryExpr([scale](Real v) {
            return v > Real(0) ? scale : (v < Real(0) ? -scale : Real(0));
        });
        *grads = model.backward(trace, g);
    }
    return loss;
}

class AdamOptimizer {
public:
    AdamOptimizer(const DenoiseModel& model, AdamConfig cfg);
    void step(DenoiseModel& model, const std::vector<Matrix<float>>& grads);
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
    std::size_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Matrix<float>> m_, v_;
    std::size_t t_ = 0;
};

/// Every field divided by the input RMS; an all-zero input is returned as is.
TrainSample scale_normalized(const TrainSample& s);

using SampleSource = std::function<TrainSample(std::uint64_t index)>;

struct TrainResult {
    DenoiseModel model;
    std::vector<LossPoint> loss_trace;
};

/// Single pass: step s consumes samples s * batch .. s * batch + batch - 1,
/// each produced once by `source`. Throws TrainingDiverged on a non-finite loss.
TrainResult train(DenoiseModel model, const SampleSource& source, const TrainConfig& cfg,
                  const std::function<void(const LossPoint&)>& on_step = {});

void write_loss_trace(const std::filesystem::path& path, const std::vector<LossPoint>& trace);

// Checkpoint: <stem>.json manifest (layer shapes, activation, version) and
// <stem>.bin with little-endian float32 weights in manifest order.
void save_checkpoint(const std::filesystem::path& stem, const DenoiseModel& model);
DenoiseModel load_checkpoint(const std::filesystem::path& stem);

}  // namespace mrdl::model
