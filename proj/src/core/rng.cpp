#include "mrdl/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace mrdl {

namespace {

std::array<double, 2> box_muller(double u1, double u2) {
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

std::array<double, 2> GaussianStream::pair(std::uint64_t index) const {
    const auto b = gen_({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)});
    const double u1 = bits_to_open_unit((std::uint64_t{b[0]} << 32) | b[1]);
    const double u2 = bits_to_open_unit((std::uint64_t{b[2]} << 32) | b[3]);
    return box_muller(u1, u2);
}

std::uint64_t Rng::next_u64() {
    if (buffered_ == 0) {
        buffer_ = gen_({static_cast<std::uint32_t>(counter_),
                        static_cast<std::uint32_t>(counter_ >> 32), 0x5EEDu, 0u});
        ++counter_;
        buffered_ = 2;
    }
    const int i = 2 - buffered_;
    --buffered_;
    return (std::uint64_t{buffer_[2 * i]} << 32) | buffer_[2 * i + 1];
}

double Rng::uniform() { return bits_to_open_unit(next_u64()); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const auto z = box_muller(u1, u2);
    spare_normal_ = z[1];
    has_spare_ = true;
    return z[0];
}

}  // namespace mrdl
