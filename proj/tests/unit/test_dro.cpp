#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "mrdl/core/noise.hpp"
#include "mrdl/core/rng.hpp"
#include "mrdl/dro/dro.hpp"

using namespace mrdl;
using namespace mrdl::dro;

TEST_CASE("default CNR ladder") {
    const auto levels = default_cnr_levels();
    REQUIRE(levels.size() == 10);
    CHECK(levels.front() == 1.0);
    CHECK(levels.back() == 25.0);
    for (std::size_t i = 1; i < levels.size(); ++i)
        CHECK(levels[i] / levels[i - 1] == doctest::Approx(std::pow(25.0, 1.0 / 9.0)));
}

TEST_CASE("magnitude noise std") {
    CHECK(magnitude_noise_std(0.0, 2.0) == doctest::Approx(2.0 * std::sqrt(2.0 - std::numbers::pi / 2.0)));
    CHECK(magnitude_noise_std(100.0, 1.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(magnitude_noise_std(5.0, 0.0) == 0.0);

    // Monte-Carlo oracle at an intermediate background.
    for (double bg : {0.0, 1.0, 2.5}) {
        Rng rng(99);
        const int n = 400000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double m = std::abs(Complex(bg + rng.normal(), rng.normal()));
            s += m;
            s2 += m * m;
        }
        const double mc = std::sqrt(s2 / n - (s / n) * (s / n));
        CHECK(magnitude_noise_std(bg, 1.0) == doctest::Approx(mc).epsilon(0.01));
    }
}

TEST_CASE("disk grid layout") {
    DiskGridSpec spec;
    const auto truth = layout_disk_grid(spec);
    CHECK(truth.disks.size() == 120);
    std::set<std::pair<int, double>> cells;
    for (const auto& d : truth.disks) cells.insert({d.diameter, d.cnr});
    CHECK(cells.size() == 120);

    const double noise_std = magnitude_noise_std(spec.background, spec.noise_sigma);
    for (const auto& d : truth.disks) CHECK(d.amplitude == doctest::Approx(d.cnr * noise_std));

    spec.cell_size = 15;  // 12 + guard band 4 does not fit
    CHECK_THROWS_AS(layout_disk_grid(spec), LayoutError);
    spec.cell_size = 20;
    spec.diameters.clear();
    CHECK_THROWS_AS(layout_disk_grid(spec), LayoutError);
}

TEST_CASE("disk rasterization") {
    DiskTruth one{0, 10.0, 10.0, 1, 1.0, 1.0};
    int count = 0;
    for (std::size_t y = 0; y < 20; ++y)
        for (std::size_t x = 0; x < 20; ++x) count += inside_disk(one, x, y);
    CHECK(count == 1);

    DiskTruth two{0, 9.5, 9.5, 2, 1.0, 1.0};
    count = 0;
    for (std::size_t y = 0; y < 20; ++y)
        for (std::size_t x = 0; x < 20; ++x) count += inside_disk(two, x, y);
    CHECK(count == 4);
}

TEST_CASE("noiseless grid has exact disk values; ground truth re-renders") {
    DiskGridSpec spec;
    spec.background = 3.0;
    const auto truth = layout_disk_grid(spec);
    const auto noiseless = render_disks(truth);
    for (const auto& d : truth.disks) {
        const auto x = static_cast<std::size_t>(std::ceil(d.cx));
        const auto y = static_cast<std::size_t>(std::ceil(d.cy));
        CHECK(noiseless.at(x, y).real() == truth.background + d.amplitude);
    }
    CHECK(noiseless.at(0, 0).real() == 3.0);

    spec.noise_sigma = 0.0;
    const auto zero_noise = generate_disk_grid(spec, 5);
    CHECK(zero_noise.image == render_disks(zero_noise.truth));

    // JSON round trip reproduces the noiseless object exactly.
    const auto dir = std::filesystem::temp_directory_path() / "mrdl_test_dro";
    write_ground_truth(dir / "truth.json", truth);
    const auto back = read_ground_truth(dir / "truth.json");
    CHECK(back == truth);
    CHECK(render_disks(back) == noiseless);
    CHECK_THROWS_AS(back.find(999), ParameterError);
}

TEST_CASE("48 noise realizations share one ground truth") {
    DiskGridSpec spec;
    const auto first = generate_disk_grid(spec, realization_seed(1, 0));
    const auto noiseless = render_disks(first.truth);
    for (std::uint64_t r = 1; r < 48; ++r) {
        const auto g = generate_disk_grid(spec, realization_seed(1, r));
        CHECK(g.truth == first.truth);
        CHECK_FALSE(g.image == first.image);
    }
    // Per-image noise variance (per component) from the residual.
    const auto residual = first.image - noiseless;
    CHECK(residual.energy() / (2.0 * residual.size()) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("SKE defaults and layout") {
    for (std::size_t k : {1u, 2u, 4u}) {
        const auto spec = SkeSpec::for_size(k);
        CHECK(spec.grid == 120);
        CHECK(spec.noise_variance == 1.41);
        // All three default objects carry the same L2 norm, 3.0.
        CHECK(std::sqrt(double(k * k)) * spec.intensity == doctest::Approx(3.0));
        const auto roi = spec.signal_roi();
        CHECK(roi.x0 == (120 - k) / 2);
    }
    CHECK(SkeSpec::for_size(2).intensity == 1.5);
    CHECK(SkeSpec::for_size(4).intensity == 0.75);
    SkeSpec bad;
    bad.object_size = 121;
    CHECK_THROWS_AS(generate_ske_pair(bad, 1), LayoutError);
}

TEST_CASE("SKE pair") {
    auto spec = SkeSpec::for_size(2);
    spec.noise_variance = 0.0;
    const auto clean = generate_ske_pair(spec, 1);
    double absent_energy = clean.absent.energy();
    CHECK(absent_energy == 0.0);
    const auto diff = clean.present - clean.absent;
    CHECK(diff == ske_signal(spec));
    std::size_t inside = 0;
    for (std::size_t i = 0; i < diff.size(); ++i)
        if (diff[i] != Complex{}) {
            CHECK(diff[i].real() == 1.5);
            ++inside;
        }
    CHECK(inside == 4);

    spec.noise_variance = 1.41;
    const auto a = generate_ske_pair(spec, 7);
    const auto b = generate_ske_pair(spec, 7);
    CHECK(a.present == b.present);
    CHECK(a.absent == b.absent);
    // Noise on the two members is independent and has the stated variance.
    const auto noise_p = a.present - ske_signal(spec);
    double cross = 0, vp = 0, va = 0;
    for (std::size_t i = 0; i < noise_p.size(); ++i) {
        cross += noise_p[i].real() * a.absent[i].real();
        vp += noise_p[i].real() * noise_p[i].real();
        va += a.absent[i].real() * a.absent[i].real();
        CHECK(a.absent[i].imag() == 0.0);
    }
    const double n = double(noise_p.size());
    CHECK(vp / n == doctest::Approx(1.41).epsilon(0.05));
    CHECK(va / n == doctest::Approx(1.41).epsilon(0.05));
    CHECK(std::abs(cross / n) < 0.05);

    spec.complex_noise = true;
    const auto c = generate_ske_pair(spec, 7);
    CHECK(c.absent.energy() / n == doctest::Approx(1.41).epsilon(0.05));
}

TEST_CASE("4096 realizations partition into 8 groups of 512") {
    const std::size_t total = 4096, groups = 8;
    CHECK(total % groups == 0);
    CHECK(total / groups == 512);
    std::set<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < total; ++r) seeds.insert(realization_seed(2024, r));
    CHECK(seeds.size() == total);
}
