#pragma once

#include "mrdl/core/field.hpp"
#include "mrdl/core/kspace.hpp"
#include "mrdl/model/network.hpp"

namespace mrdl::recon {

enum class ReconMode { Conventional, DeepLearning };

const char* to_string(ReconMode m);
ReconMode recon_mode_from_string(std::string_view s);

struct ReconConfig {
    ReconMode mode = ReconMode::Conventional;
    WindowSpec window = WindowSpec::rect();  // Conventional only
    double denoising_level = 0.75;           // DeepLearning only, in [0, 1]
    Dims output_dims{};                      // {0, 0}: keep the k-space matrix size

    void validate(Dims kspace_dims) const;
    Dims resolve_output(Dims kspace_dims) const;
};

struct ReconResult {
    ComplexField image;
    RealImage magnitude;
};

/// Apodize, zero-fill to output_dims, inverse transform, magnitude.
ReconResult conventional_recon(const ComplexField& kspace, const ReconConfig& cfg);

/// x - ring - d * noise. Ringing removal does not depend on d.
ComplexField blend_residuals(const ComplexField& image, const model::Residuals& residuals, double denoising_level);

/// CNN stage on an image already on the output grid.
ComplexField dl_process_image(const ComplexField& image, const model::DenoiseModel& model, double denoising_level);

/// Residuals for the pixels of `roi` only, computed on a crop padded by the
/// receptive-field radius. Matches cnn_forward on the full image exactly
/// inside the ROI; used when only an analysis window matters.
model::Residuals cnn_forward_roi(const model::DenoiseModel& model, const ComplexField& image, const Roi& roi);

/// dl_process_image restricted to `roi`; returns a roi-sized field.
ComplexField dl_process_roi(const ComplexField& image, const model::DenoiseModel& model, double denoising_level,
                            const Roi& roi);

/// Zero-fill to output_dims, inverse transform, CNN, blend, magnitude.
ReconResult dl_recon(const ComplexField& kspace, const model::DenoiseModel& model, const ReconConfig& cfg);

/// Single entry point; `model` is required for DeepLearning mode.
ReconResult reconstruct(const ComplexField& kspace, const ReconConfig& cfg, const model::DenoiseModel* model);

}  // namespace mrdl::recon
