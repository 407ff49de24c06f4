#pragma once

#include <filesystem>

#include "mrdl/core/field.hpp"

namespace mrdl {

// Portable field format: <stem>.f32 holds little-endian float32 samples,
// all real parts then all imaginary parts (row-major), and <stem>.json is
// the sidecar {width, height, domain, dtype: "f32", layout: "planar-ri"}.
// `path` may name either file or the bare stem.

void write_field(const std::filesystem::path& path, const ComplexField& field);
ComplexField read_field(const std::filesystem::path& path);

enum class PngScale { Linear, Log };

/// 8-bit grayscale PNG of a real image. Linear maps [min, max] to [0, 255];
/// Log maps log(1 + v / vmax * 1000) so faint structure stays visible.
void write_png(const std::filesystem::path& path, const RealImage& image, PngScale scale = PngScale::Linear);

}  // namespace mrdl
