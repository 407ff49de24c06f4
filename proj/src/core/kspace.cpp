#include "mrdl/core/kspace.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mrdl/core/fft.hpp"

namespace mrdl {

namespace {

std::string dims_str(std::size_t w, std::size_t h) {
    return std::to_string(w) + "x" + std::to_string(h);
}

}  // namespace

ComplexField truncate_kspace(const ComplexField& kspace, std::size_t target_w, std::size_t target_h) {
    kspace.require_domain(Domain::KSpace, "truncate_kspace");
    if (target_w == 0 || target_h == 0 || target_w > kspace.width() || target_h > kspace.height())
        throw DimensionError("truncate_kspace: target " + dims_str(target_w, target_h) +
                             " must be within source " + dims_str(kspace.width(), kspace.height()));
    ComplexField out({target_w, target_h}, Domain::KSpace);
    const std::size_t ox = kspace.width() / 2 - target_w / 2;
    const std::size_t oy = kspace.height() / 2 - target_h / 2;
    for (std::size_t y = 0; y < target_h; ++y)
        for (std::size_t x = 0; x < target_w; ++x) out.at(x, y) = kspace.at(x + ox, y + oy);
    return out;
}

ComplexField zero_fill(const ComplexField& kspace, std::size_t target_w, std::size_t target_h) {
    kspace.require_domain(Domain::KSpace, "zero_fill");
    if (target_w < kspace.width() || target_h < kspace.height())
        throw DimensionError("zero_fill: target " + dims_str(target_w, target_h) +
                             " smaller than source " + dims_str(kspace.width(), kspace.height()));
    ComplexField out({target_w, target_h}, Domain::KSpace);
    const std::size_t ox = target_w / 2 - kspace.width() / 2;
    const std::size_t oy = target_h / 2 - kspace.height() / 2;
    for (std::size_t y = 0; y < kspace.height(); ++y)
        for (std::size_t x = 0; x < kspace.width(); ++x) out.at(x + ox, y + oy) = kspace.at(x, y);
    return out;
}

const char* to_string(WindowKind k) {
    switch (k) {
        case WindowKind::Rect: return "rect";
        case WindowKind::Tukey: return "tukey";
        case WindowKind::Hann: return "hann";
        case WindowKind::Fermi: return "fermi";
    }
    return "?";
}

WindowKind window_kind_from_string(std::string_view s) {
    if (s == "rect") return WindowKind::Rect;
    if (s == "tukey") return WindowKind::Tukey;
    if (s == "hann") return WindowKind::Hann;
    if (s == "fermi") return WindowKind::Fermi;
    throw ParameterError("unknown window kind '" + std::string(s) + "'");
}

std::vector<double> window_profile(const WindowSpec& spec, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2 || spec.kind == WindowKind::Rect) return w;
    const double c = static_cast<double>(n / 2);
    const double half = static_cast<double>(n) / 2.0;
    using std::numbers::pi;
    switch (spec.kind) {
        case WindowKind::Rect: break;
        case WindowKind::Hann:
            for (std::size_t j = 0; j < n; ++j) {
                const double x = (static_cast<double>(j) - c) / half;
                w[j] = 0.5 * (1.0 + std::cos(pi * x));
            }
            break;
        case WindowKind::Tukey: {
            const double a = spec.taper;
            if (a < 0.0 || a > 1.0) throw ParameterError("tukey taper must lie in [0, 1]");
            if (a == 0.0) break;
            for (std::size_t j = 0; j < n; ++j) {
                const double ax = std::abs((static_cast<double>(j) - c) / half);
                if (ax > 1.0 - a) w[j] = 0.5 * (1.0 + std::cos(pi * (ax - 1.0 + a) / a));
            }
            break;
        }
        case WindowKind::Fermi: {
            const double width = spec.taper;
            if (!(width > 0.0)) throw ParameterError("fermi transition width must be positive");
            const double r0 = std::max(0.0, half - 3.0 * width);
            for (std::size_t j = 0; j < n; ++j) {
                const double r = std::abs(static_cast<double>(j) - c);
                w[j] = 1.0 / (1.0 + std::exp((r - r0) / width));
            }
            break;
        }
    }
    return w;
}

ComplexField apodize(const ComplexField& kspace, const WindowSpec& window) {
    kspace.require_domain(Domain::KSpace, "apodize");
    if (window.kind == WindowKind::Rect) return kspace;
    const auto wx = window_profile(window, kspace.width());
    const auto wy = window_profile(window, kspace.height());
    ComplexField out = kspace;
    for (std::size_t y = 0; y < out.height(); ++y)
        for (std::size_t x = 0; x < out.width(); ++x) out.at(x, y) *= wx[x] * wy[y];
    return out;
}

double window_noise_gain(const WindowSpec& window, Dims dims) {
    const auto wx = window_profile(window, dims.width);
    const auto wy = window_profile(window, dims.height);
    double sx = 0.0, sy = 0.0;
    for (double v : wx) sx += v * v;
    for (double v : wy) sy += v * v;
    return sx * sy / static_cast<double>(dims.count());
}

ComplexField simulate_acquisition(const ComplexField& object, std::size_t acq_w, std::size_t acq_h) {
    object.require_domain(Domain::Image, "simulate_acquisition");
    auto k = truncate_kspace(forward_fft(object), acq_w, acq_h);
    const double ratio = static_cast<double>(acq_w * acq_h) / static_cast<double>(object.size());
    if (ratio != 1.0) k *= std::sqrt(ratio);
    return k;
}

ComplexField interpolate_to_image(const ComplexField& kspace, Dims output) {
    auto img = inverse_fft(zero_fill(kspace, output.width, output.height));
    const double ratio = static_cast<double>(output.count()) / static_cast<double>(kspace.size());
    if (ratio != 1.0) img *= std::sqrt(ratio);
    return img;
}

}  // namespace mrdl
