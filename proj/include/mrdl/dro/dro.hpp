#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mrdl/core/field.hpp"

namespace mrdl::dro {

/// Ten CNR levels spaced logarithmically between 1 and 25.
std::vector<double> default_cnr_levels();

struct DiskGridSpec {
    std::vector<int> diameters{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::vector<double> cnr_levels = default_cnr_levels();
    double noise_sigma = 1.0;  // per real/imaginary component
    std::size_t cell_size = 20;
    double background = 0.0;

    /// Minimum clearance between a disk and its cell boundary, in pixels.
    static constexpr std::size_t kGuardBand = 4;

    Dims dims() const { return {diameters.size() * cell_size, cnr_levels.size() * cell_size}; }
    void validate() const;
};

struct DiskTruth {
    std::size_t id = 0;
    double cx = 0.0;  // pixel coordinates; pixel (x, y) has its center at (x, y)
    double cy = 0.0;
    int diameter = 0;
    double cnr = 0.0;
    double amplitude = 0.0;

    friend bool operator==(const DiskTruth&, const DiskTruth&) = default;
};

struct GroundTruthMap {
    Dims dims{};
    double background = 0.0;
    std::vector<DiskTruth> disks;

    const DiskTruth& find(std::size_t id) const;
    friend bool operator==(const GroundTruthMap&, const GroundTruthMap&) = default;
};

nlohmann::json to_json(const GroundTruthMap& truth);
GroundTruthMap ground_truth_from_json(const nlohmann::json& j);
void write_ground_truth(const std::filesystem::path& path, const GroundTruthMap& truth);
GroundTruthMap read_ground_truth(const std::filesystem::path& path);

/// Standard deviation of the magnitude of (background + complex Gaussian
/// noise with per-component sigma), i.e. the Rician std. For background 0
/// this is the Rayleigh value sigma * sqrt(2 - pi/2).
double magnitude_noise_std(double background, double sigma);

/// Pixels whose centers lie within diameter/2 of (cx, cy).
bool inside_disk(const DiskTruth& disk, std::size_t x, std::size_t y);

/// Layout and amplitudes for a spec, without rendering.
GroundTruthMap layout_disk_grid(const DiskGridSpec& spec);

/// Noiseless image rendered from a ground-truth map.
ComplexField render_disks(const GroundTruthMap& truth);

struct DiskGridRealization {
    ComplexField image;
    GroundTruthMap truth;
};

/// Noiseless disks plus complex white Gaussian noise drawn from `seed`.
DiskGridRealization generate_disk_grid(const DiskGridSpec& spec, std::uint64_t seed);

struct SkeSpec {
    std::size_t grid = 120;
    std::size_t object_size = 1;
    double intensity = 3.0;
    double noise_variance = 1.41;  // per image
    bool complex_noise = false;    // real-valued white noise unless set

    /// (1, 3.0), (2, 1.5), (4, 0.75): all three carry signal L2 norm 3.0.
    static SkeSpec for_size(std::size_t object_size);
    Roi signal_roi() const;
    void validate() const;
};

struct SkePair {
    ComplexField present;
    ComplexField absent;
};

/// Noiseless k x k square of `intensity` anchored at floor((grid - k) / 2).
ComplexField ske_signal(const SkeSpec& spec);

/// Independent noise on each member of the pair; both derived from `seed`.
SkePair generate_ske_pair(const SkeSpec& spec, std::uint64_t seed);

/// Seed of realization `index` within a study seeded by `base`.
std::uint64_t realization_seed(std::uint64_t base, std::uint64_t index);

}  // namespace mrdl::dro
