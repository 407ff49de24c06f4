#include "mrdl/recon/recon.hpp"

#include <algorithm>
#include <string>

namespace mrdl::recon {

const char* to_string(ReconMode m) {
    return m == ReconMode::Conventional ? "conventional" : "deep_learning";
}

ReconMode recon_mode_from_string(std::string_view s) {
    if (s == "conventional") return ReconMode::Conventional;
    if (s == "deep_learning" || s == "dl") return ReconMode::DeepLearning;
    throw ParameterError("unknown reconstruction mode '" + std::string(s) + "'");
}

Dims ReconConfig::resolve_output(Dims kspace_dims) const {
    return output_dims.count() == 0 ? kspace_dims : output_dims;
}

void ReconConfig::validate(Dims kspace_dims) const {
    if (!(denoising_level >= 0.0 && denoising_level <= 1.0))
        throw ParameterError("denoising level must lie in [0, 1]");
    const Dims out = resolve_output(kspace_dims);
    if (out.width < kspace_dims.width || out.height < kspace_dims.height)
        throw DimensionError("output dims must not be smaller than the k-space matrix");
}

ReconResult conventional_recon(const ComplexField& kspace, const ReconConfig& cfg) {
    kspace.require_domain(Domain::KSpace, "conventional_recon");
    if (cfg.mode != ReconMode::Conventional) throw ParameterError("conventional_recon needs Conventional mode");
    cfg.validate(kspace.dims());
    auto image = interpolate_to_image(apodize(kspace, cfg.window), cfg.resolve_output(kspace.dims()));
    auto mag = magnitude(image);
    return {std::move(image), std::move(mag)};
}

ComplexField blend_residuals(const ComplexField& image, const model::Residuals& residuals, double denoising_level) {
    if (!(denoising_level >= 0.0 && denoising_level <= 1.0))
        throw ParameterError("denoising level must lie in [0, 1]");
    ComplexField out = image - residuals.ring;
    if (denoising_level != 0.0) out -= denoising_level * residuals.noise;
    return out;
}

ComplexField dl_process_image(const ComplexField& image, const model::DenoiseModel& model, double denoising_level) {
    return blend_residuals(image, model::cnn_forward(model, image), denoising_level);
}

model::Residuals cnn_forward_roi(const model::DenoiseModel& model, const ComplexField& image, const Roi& roi) {
    if (!roi.fits(image.dims())) throw DimensionError("roi outside image bounds");
    const std::size_t rf = model.receptive_field();
    const std::size_t margin = rf / 2;
    // Padded window, clamped to the image (where the zero padding then
    // coincides with the full-image computation), and grown if needed to
    // hold one receptive field.
    auto span = [&](std::size_t lo, std::size_t len, std::size_t n) {
        std::size_t a = lo > margin ? lo - margin : 0;
        std::size_t b = std::min(n, lo + len + margin);
        while (b - a < rf && (a > 0 || b < n)) {
            if (a > 0) --a;
            if (b - a < rf && b < n) ++b;
        }
        return std::pair{a, b};
    };
    const auto [x0, x1] = span(roi.x0, roi.width, image.width());
    const auto [y0, y1] = span(roi.y0, roi.height, image.height());
    const Roi window{x0, y0, x1 - x0, y1 - y0};
    const auto res = model::cnn_forward(model, crop(image, window));
    const Roi inner{roi.x0 - x0, roi.y0 - y0, roi.width, roi.height};
    return {crop(res.ring, inner), crop(res.noise, inner)};
}

ComplexField dl_process_roi(const ComplexField& image, const model::DenoiseModel& model, double denoising_level,
                            const Roi& roi) {
    return blend_residuals(crop(image, roi), cnn_forward_roi(model, image, roi), denoising_level);
}

ReconResult dl_recon(const ComplexField& kspace, const model::DenoiseModel& model, const ReconConfig& cfg) {
    kspace.require_domain(Domain::KSpace, "dl_recon");
    if (cfg.mode != ReconMode::DeepLearning) throw ParameterError("dl_recon needs DeepLearning mode");
    cfg.validate(kspace.dims());
    const Dims out = cfg.resolve_output(kspace.dims());
    if (model.receptive_field() >= std::min(out.width, out.height))
        throw DimensionError("model receptive field " + std::to_string(model.receptive_field()) +
                             " must be smaller than the output matrix");
    const auto input = interpolate_to_image(kspace, out);
    auto image = dl_process_image(input, model, cfg.denoising_level);
    auto mag = magnitude(image);
    return {std::move(image), std::move(mag)};
}

ReconResult reconstruct(const ComplexField& kspace, const ReconConfig& cfg, const model::DenoiseModel* model) {
    if (cfg.mode == ReconMode::Conventional) return conventional_recon(kspace, cfg);
    if (!model) throw ParameterError("deep-learning reconstruction requires a model");
    return dl_recon(kspace, *model, cfg);
}

}  // namespace mrdl::recon
