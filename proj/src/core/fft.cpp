#include "mrdl/core/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace mrdl {

namespace {

// FFTW's planner is not re-entrant; execution of an existing plan on new
// arrays is. Plans live for the whole process.
class PlanCache {
public:
    fftw_plan get(std::size_t w, std::size_t h, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(w, h, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* in = fftw_alloc_complex(w * h);
        auto* out = fftw_alloc_complex(w * h);
        fftw_plan p = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in, out, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

// Moves the centered origin to index 0 (ifftshift) or back (fftshift).
std::vector<Complex> shift(std::span<const Complex> src, Dims d, bool to_corner) {
    const std::size_t hx = d.width / 2;
    const std::size_t hy = d.height / 2;
    std::vector<Complex> dst(src.size());
    for (std::size_t y = 0; y < d.height; ++y) {
        for (std::size_t x = 0; x < d.width; ++x) {
            std::size_t sx, sy;
            if (to_corner) {
                sx = (x + hx) % d.width;
                sy = (y + hy) % d.height;
            } else {
                sx = (x + d.width - hx) % d.width;
                sy = (y + d.height - hy) % d.height;
            }
            dst[y * d.width + x] = src[sy * d.width + sx];
        }
    }
    return dst;
}

ComplexField transform(const ComplexField& in, int sign, Domain out_domain) {
    const Dims d = in.dims();
    auto buffer = shift(in.samples(), d, /*to_corner=*/true);
    std::vector<Complex> spectrum(buffer.size());
    fftw_plan plan = plan_cache().get(d.width, d.height, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buffer.data()),
                     reinterpret_cast<fftw_complex*>(spectrum.data()));
    auto centered = shift(spectrum, d, /*to_corner=*/false);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d.count()));
    for (auto& c : centered) c *= scale;
    return ComplexField(d, out_domain, std::move(centered));
}

}  // namespace

ComplexField forward_fft(const ComplexField& image) {
    image.require_domain(Domain::Image, "forward_fft");
    return transform(image, FFTW_FORWARD, Domain::KSpace);
}

ComplexField inverse_fft(const ComplexField& kspace) {
    kspace.require_domain(Domain::KSpace, "inverse_fft");
    return transform(kspace, FFTW_BACKWARD, Domain::Image);
}

}  // namespace mrdl
