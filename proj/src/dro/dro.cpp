#include "mrdl/dro/dro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mrdl/core/noise.hpp"
#include "mrdl/core/rng.hpp"

namespace mrdl::dro {

std::vector<double> default_cnr_levels() {
    std::vector<double> levels(10);
    for (std::size_t i = 0; i < levels.size(); ++i)
        levels[i] = std::exp(std::log(25.0) * static_cast<double>(i) / 9.0);
    levels.back() = 25.0;
    return levels;
}

void DiskGridSpec::validate() const {
    if (diameters.empty() || cnr_levels.empty())
        throw LayoutError("disk grid needs at least one diameter and one CNR level");
    if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");
    for (int d : diameters)
        if (d < 1) throw LayoutError("disk diameters must be >= 1");
    for (double c : cnr_levels)
        if (!(c >= 0.0)) throw ParameterError("CNR levels must be >= 0");
    const int dmax = *std::max_element(diameters.begin(), diameters.end());
    if (cell_size < static_cast<std::size_t>(dmax) + kGuardBand)
        throw LayoutError("disk of diameter " + std::to_string(dmax) + " does not fit a " +
                          std::to_string(cell_size) + "-pixel cell with guard band");
}

const DiskTruth& GroundTruthMap::find(std::size_t id) const {
    if (id < disks.size() && disks[id].id == id) return disks[id];
    for (const auto& d : disks)
        if (d.id == id) return d;
    throw ParameterError("unknown disk id " + std::to_string(id));
}

nlohmann::json to_json(const GroundTruthMap& truth) {
    nlohmann::json disks = nlohmann::json::array();
    for (const auto& d : truth.disks)
        disks.push_back({{"id", d.id},
                         {"cx", d.cx},
                         {"cy", d.cy},
                         {"diameter", d.diameter},
                         {"cnr", d.cnr},
                         {"amplitude", d.amplitude}});
    return {{"width", truth.dims.width},
            {"height", truth.dims.height},
            {"background", truth.background},
            {"disks", disks}};
}

GroundTruthMap ground_truth_from_json(const nlohmann::json& j) {
    GroundTruthMap t;
    t.dims = {j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>()};
    t.background = j.at("background").get<double>();
    for (const auto& d : j.at("disks"))
        t.disks.push_back({d.at("id").get<std::size_t>(), d.at("cx").get<double>(),
                           d.at("cy").get<double>(), d.at("diameter").get<int>(),
                           d.at("cnr").get<double>(), d.at("amplitude").get<double>()});
    return t;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruthMap& truth) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << to_json(truth).dump(2) << "\n";
}

GroundTruthMap read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return ground_truth_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed ground truth " + path.string() + ": " + e.what());
    }
}

double magnitude_noise_std(double background, double sigma) {
    if (sigma <= 0.0) return 0.0;
    const double snr = std::abs(background) / sigma;
    // Bessel terms overflow long before the Rician std departs from sigma.
    if (snr > 30.0) return sigma * std::sqrt(1.0 - 0.5 / (snr * snr));
    const double x = -background * background / (2.0 * sigma * sigma);
    const double laguerre =
        std::exp(x / 2.0) * ((1.0 - x) * std::cyl_bessel_i(0.0, -x / 2.0) - x * std::cyl_bessel_i(1.0, -x / 2.0));
    const double mean = sigma * std::sqrt(std::numbers::pi / 2.0) * laguerre;
    const double second = background * background + 2.0 * sigma * sigma;
    return std::sqrt(std::max(0.0, second - mean * mean));
}

bool inside_disk(const DiskTruth& disk, std::size_t x, std::size_t y) {
    const double dx = static_cast<double>(x) - disk.cx;
    const double dy = static_cast<double>(y) - disk.cy;
    const double r = disk.diameter / 2.0;
    return dx * dx + dy * dy <= r * r;
}

GroundTruthMap layout_disk_grid(const DiskGridSpec& spec) {
    spec.validate();
    GroundTruthMap truth;
    truth.dims = spec.dims();
    truth.background = spec.background;
    const double noise_std = magnitude_noise_std(spec.background, spec.noise_sigma);
    const double half = static_cast<double>(spec.cell_size / 2);
    for (std::size_t row = 0; row < spec.cnr_levels.size(); ++row) {
        for (std::size_t col = 0; col < spec.diameters.size(); ++col) {
            const int d = spec.diameters[col];
            // Odd diameters center on a pixel, even ones on a pixel corner.
            const double offset = d % 2 == 0 ? 0.5 : 0.0;
            DiskTruth disk;
            disk.id = truth.disks.size();
            disk.cx = static_cast<double>(col * spec.cell_size) + half - offset;
            disk.cy = static_cast<double>(row * spec.cell_size) + half - offset;
            disk.diameter = d;
            disk.cnr = spec.cnr_levels[row];
            disk.amplitude = disk.cnr * noise_std;
            truth.disks.push_back(disk);
        }
    }
    return truth;
}

ComplexField render_disks(const GroundTruthMap& truth) {
    ComplexField img(truth.dims, Domain::Image);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = truth.background;
    for (const auto& disk : truth.disks) {
        const double r = disk.diameter / 2.0;
        const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(disk.cx - r)));
        const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(disk.cy - r)));
        const auto x1 = std::min(truth.dims.width - 1, static_cast<std::size_t>(std::ceil(disk.cx + r)));
        const auto y1 = std::min(truth.dims.height - 1, static_cast<std::size_t>(std::ceil(disk.cy + r)));
        for (std::size_t y = y0; y <= y1; ++y)
            for (std::size_t x = x0; x <= x1; ++x)
                if (inside_disk(disk, x, y)) img.at(x, y) = truth.background + disk.amplitude;
    }
    return img;
}

DiskGridRealization generate_disk_grid(const DiskGridSpec& spec, std::uint64_t seed) {
    auto truth = layout_disk_grid(spec);
    auto image = add_complex_gaussian_noise(render_disks(truth), {spec.noise_sigma, seed});
    return {std::move(image), std::move(truth)};
}

SkeSpec SkeSpec::for_size(std::size_t object_size) {
    SkeSpec s;
    s.object_size = object_size;
    switch (object_size) {
        case 1: s.intensity = 3.0; break;
        case 2: s.intensity = 1.5; break;
        case 4: s.intensity = 0.75; break;
        default: s.intensity = 3.0 / static_cast<double>(object_size);
    }
    return s;
}

void SkeSpec::validate() const {
    if (object_size == 0 || object_size > grid)
        throw LayoutError("SKE object of size " + std::to_string(object_size) + " does not fit a " +
                          std::to_string(grid) + "-pixel grid");
    if (!(noise_variance >= 0.0)) throw ParameterError("noise variance must be >= 0");
}

Roi SkeSpec::signal_roi() const {
    validate();
    const std::size_t anchor = (grid - object_size) / 2;
    return {anchor, anchor, object_size, object_size};
}

ComplexField ske_signal(const SkeSpec& spec) {
    const Roi roi = spec.signal_roi();
    ComplexField img({spec.grid, spec.grid}, Domain::Image);
    for (std::size_t y = roi.y0; y < roi.y0 + roi.height; ++y)
        for (std::size_t x = roi.x0; x < roi.x0 + roi.width; ++x) img.at(x, y) = spec.intensity;
    return img;
}

SkePair generate_ske_pair(const SkeSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ComplexField empty({spec.grid, spec.grid}, Domain::Image);
    const auto signal = ske_signal(spec);
    const NoiseSpec present{0, derive_seed(seed, {1})};
    const NoiseSpec absent{0, derive_seed(seed, {0})};
    if (spec.complex_noise) {
        // Per-image variance split evenly between the two components.
        const double sigma = std::sqrt(spec.noise_variance / 2.0);
        return {add_complex_gaussian_noise(signal, {sigma, present.seed}),
                add_complex_gaussian_noise(empty, {sigma, absent.seed})};
    }
    const double sigma = std::sqrt(spec.noise_variance);
    return {add_real_gaussian_noise(signal, {sigma, present.seed}),
            add_real_gaussian_noise(empty, {sigma, absent.seed})};
}

std::uint64_t realization_seed(std::uint64_t base, std::uint64_t index) {
    return derive_seed(base, {0xD20ull, index});
}

}  // namespace mrdl::dro
