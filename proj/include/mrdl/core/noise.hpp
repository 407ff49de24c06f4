#pragma once

#include <cstdint>

#include "mrdl/core/field.hpp"

namespace mrdl {

struct NoiseSpec {
    double sigma = 0.0;  // per real/imaginary component
    std::uint64_t seed = 0;
};

/// Adds circularly symmetric complex white Gaussian noise. Sample i draws
/// from GaussianStream(seed).pair(i), so equal (spec, target) pairs give
/// bit-identical output.
ComplexField add_complex_gaussian_noise(const ComplexField& field, const NoiseSpec& spec);

/// Real-valued white Gaussian noise (imaginary components untouched).
ComplexField add_real_gaussian_noise(const ComplexField& field, const NoiseSpec& spec);

/// The noise field alone (what add_complex_gaussian_noise would add).
ComplexField complex_gaussian_noise(Dims dims, Domain domain, const NoiseSpec& spec);

}  // namespace mrdl
