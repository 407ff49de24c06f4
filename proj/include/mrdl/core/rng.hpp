#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace mrdl {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Counter-based: output depends only on (key, counter), so any sample of a
// noise field can be regenerated independently and in any order.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
    explicit constexpr Philox4x32(Key key) : key_(key) {}

    constexpr Block operator()(Block ctr) const {
        Key k = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += kWeyl0;
                k[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = Block{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0],
                        static_cast<std::uint32_t>(p1),
                        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1],
                        static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    Key key_;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Child seed for a labelled sub-stream, e.g. derive_seed(seed, {realization, cls}).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t s = mix64(base);
    for (auto l : labels) s = mix64(s ^ mix64(l + 0x632BE59BD9B4E019ull));
    return s;
}

/// Maps 64 random bits onto the open interval (0, 1).
constexpr double bits_to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Stream of standard normals addressed by (seed, stream, index).
/// Each index yields a pair of independent N(0,1) values via Box-Muller.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream = 0) : gen_(seed), stream_(stream) {}

    std::array<double, 2> pair(std::uint64_t index) const;

private:
    Philox4x32 gen_;
    std::uint64_t stream_;
};

/// Sequential convenience generator on top of Philox, for code that just
/// needs "the next" uniform or normal (training corpora, augmentation draws).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64();
    double uniform();  // (0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();

private:
    Philox4x32 gen_;
    std::uint64_t counter_ = 0;
    Philox4x32::Block buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mrdl
