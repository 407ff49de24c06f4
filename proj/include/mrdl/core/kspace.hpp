#pragma once

#include <vector>

#include "mrdl/core/field.hpp"

namespace mrdl {

/// Central target_w x target_h block of a DC-centered spectrum.
/// Pure index operation; values are copied bit-for-bit.
ComplexField truncate_kspace(const ComplexField& kspace, std::size_t target_w, std::size_t target_h);

/// Places the spectrum centrally in a larger zero grid (inverse of truncate_kspace).
ComplexField zero_fill(const ComplexField& kspace, std::size_t target_w, std::size_t target_h);

enum class WindowKind { Rect, Tukey, Hann, Fermi };

const char* to_string(WindowKind k);
WindowKind window_kind_from_string(std::string_view s);

struct WindowSpec {
    WindowKind kind = WindowKind::Rect;
    // Tukey: tapered fraction in [0, 1] (0 = Rect, 1 = Hann).
    // Fermi: transition width in samples (> 0).
    double taper = 0.0;

    static WindowSpec rect() { return {WindowKind::Rect, 0.0}; }
    static WindowSpec hann() { return {WindowKind::Hann, 1.0}; }
    static WindowSpec tukey(double fraction) { return {WindowKind::Tukey, fraction}; }
    static WindowSpec fermi(double width) { return {WindowKind::Fermi, width}; }
};

/// 1D window over n DC-centered samples; the 2D window is the outer product
/// of the row and column profiles.
///
/// With x = (j - floor(n/2)) / (n/2) in [-1, 1):
///   Hann   0.5 (1 + cos(pi x))
///   Tukey  1 for |x| <= 1 - a, else 0.5 (1 + cos(pi (|x| - 1 + a) / a))
///   Fermi  1 / (1 + exp((|j - c| - r0) / width)), r0 = n/2 - 3 width
std::vector<double> window_profile(const WindowSpec& spec, std::size_t n);

ComplexField apodize(const ComplexField& kspace, const WindowSpec& window);

/// Sum over the 2D window of |W|^2 divided by sample count; the factor by
/// which apodization scales white-noise variance.
double window_noise_gain(const WindowSpec& window, Dims dims);

/// Simulated Cartesian acquisition of an object rendered on a fine grid:
/// the central acq_w x acq_h block of its spectrum, rescaled so that the
/// inverse transform on the acquisition grid reproduces object intensity.
ComplexField simulate_acquisition(const ComplexField& object, std::size_t acq_w, std::size_t acq_h);

/// Zero-filled (periodic sinc) interpolation of a k-space onto a larger image
/// grid, intensity-preserving: samples on the original grid keep their values.
ComplexField interpolate_to_image(const ComplexField& kspace, Dims output);

}  // namespace mrdl
