#include "mrdl/core/noise.hpp"

#include "mrdl/core/rng.hpp"

namespace mrdl {

namespace {

void check_sigma(double sigma) {
    if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
}

}  // namespace

ComplexField complex_gaussian_noise(Dims dims, Domain domain, const NoiseSpec& spec) {
    check_sigma(spec.sigma);
    ComplexField out(dims, domain);
    if (spec.sigma == 0.0) return out;
    const GaussianStream stream(spec.seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto z = stream.pair(i);
        out[i] = Complex(spec.sigma * z[0], spec.sigma * z[1]);
    }
    return out;
}

ComplexField add_complex_gaussian_noise(const ComplexField& field, const NoiseSpec& spec) {
    check_sigma(spec.sigma);
    if (spec.sigma == 0.0) return field;
    return field + complex_gaussian_noise(field.dims(), field.domain(), spec);
}

ComplexField add_real_gaussian_noise(const ComplexField& field, const NoiseSpec& spec) {
    check_sigma(spec.sigma);
    ComplexField out = field;
    if (spec.sigma == 0.0) return out;
    const GaussianStream stream(spec.seed, /*stream=*/1);
    // Both Box-Muller outputs are used: samples 2k and 2k+1 share pair(k).
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const auto z = stream.pair(i / 2);
        out[i] += spec.sigma * z[0];
        if (i + 1 < out.size()) out[i + 1] += spec.sigma * z[1];
    }
    return out;
}

}  // namespace mrdl
