#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mrdl/core/noise.hpp"
#include "mrdl/core/rng.hpp"
#include "mrdl/metrics/metrics.hpp"
#include "mrdl/metrics/svg.hpp"

using namespace mrdl;
using namespace mrdl::metrics;

namespace {

RealImage noisy_constant(Dims d, double level, double sigma, std::uint64_t seed) {
    ComplexField f(d, Domain::Image);
    for (auto& v : f.samples()) v = level;
    return real_part(add_real_gaussian_noise(f, {sigma, seed}));
}

// Mean of n independent realizations.
RealImage averaged(Dims d, double level, double sigma, std::size_t n, std::uint64_t seed) {
    RealImage acc(d);
    for (std::size_t k = 0; k < n; ++k) {
        const auto img = noisy_constant(d, level, sigma, derive_seed(seed, {k}));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += img[i] / static_cast<double>(n);
    }
    return acc;
}

// Golden-section minimum of the squared residual: a regression oracle independent of the closed form.
double brute_alpha(const std::vector<SnrPoint>& pts) {
    auto cost = [&](double a) {
        double s = 0;
        for (const auto& p : pts) s += std::pow(p.snr - a * std::sqrt(p.averages), 2);
        return s;
    };
    double lo = -100, hi = 100;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (cost(a) < cost(b))
            hi = b;
        else
            lo = a;
    }
    return 0.5 * (lo + hi);
}

RealImage step_image(Dims d, double edge_x, double lo, double hi, double blur = 0.0) {
    RealImage img(d);
    for (std::size_t y = 0; y < d.height; ++y)
        for (std::size_t x = 0; x < d.width; ++x) {
            const double t = static_cast<double>(x) - edge_x;
            img.at(x, y) = blur > 0 ? lo + (hi - lo) / (1 + std::exp(-t / blur)) : (t > 0 ? hi : lo);
        }
    return img;
}

}  // namespace

TEST_CASE("snr_pair rejects identical images and mismatched sizes") {
    const auto a = noisy_constant({32, 32}, 50, 5, 1);
    CHECK_THROWS_AS(snr_pair(a, a, Roi{0, 0, 32, 32}), DegenerateMeasurement);
    CHECK_THROWS_AS(snr_pair(a, RealImage({16, 32}), Roi{0, 0, 8, 8}), DimensionError);
    CHECK_THROWS_AS(snr_pair(a, a, Roi{30, 30, 8, 8}), DimensionError);
}

TEST_CASE("snr_pair on independent noise is calibrated") {
    const Dims d{64, 64};
    const Roi roi{8, 8, 48, 48};
    double mean_snr = 0;
    constexpr int kTrials = 100;
    for (int t = 0; t < kTrials; ++t) {
        const auto a = noisy_constant(d, 50, 5, derive_seed(11, {std::uint64_t(t), 0}));
        const auto b = noisy_constant(d, 50, 5, derive_seed(11, {std::uint64_t(t), 1}));
        const auto m = snr_pair(a, b, roi);
        CHECK(m.snr == doctest::Approx(m.signal / (m.sigma / std::sqrt(2.0))).epsilon(1e-12));
        CHECK(m.sigma > 0);
        mean_snr += m.snr / kTrials;

        const auto swapped = snr_pair(b, a, roi);
        CHECK(swapped.sigma == doctest::Approx(m.sigma).epsilon(1e-12));
    }
    CHECK(std::abs(mean_snr - 10.0) < 0.5);
}

TEST_CASE("snr of n-sample means follows the square-root law") {
    const Dims d{48, 48};
    const Roi roi{4, 4, 40, 40};
    std::vector<SnrPoint> pts;
    for (std::size_t n : {1, 2, 4, 9, 15}) {
        const auto a = averaged(d, 50, 5, n, derive_seed(3, {n, 0}));
        const auto b = averaged(d, 50, 5, n, derive_seed(3, {n, 1}));
        pts.push_back({double(n), snr_pair(a, b, roi, n).snr});
    }
    const auto fit = fit_power_law(pts);
    CHECK(std::abs(fit.exponent - 0.5) < 0.05);
    CHECK(fit.r_squared > 0.99);
    CHECK(fit_sqrt_law(pts).alpha == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("fit_sqrt_law") {
    SUBCASE("exact data") {
        std::vector<SnrPoint> pts;
        for (double n : {1, 2, 3, 7, 15}) pts.push_back({n, 2 * std::sqrt(n)});
        const auto fit = fit_sqrt_law(pts);
        CHECK(fit.alpha == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(fit.rms_residual < 1e-10);
    }
    SUBCASE("single point") {
        const std::vector<SnrPoint> pts{{1, 7}};
        CHECK(fit_sqrt_law(pts).alpha == 7.0);
    }
    SUBCASE("noisy data matches a direct minimization") {
        Rng rng(5);
        std::vector<SnrPoint> pts;
        for (int n = 1; n <= 15; ++n) pts.push_back({double(n), 3 * std::sqrt(double(n)) + 0.1 * rng.normal()});
        const auto fit = fit_sqrt_law(pts);
        CHECK(std::abs(fit.alpha - 3.0) < 0.1);
        CHECK(fit.alpha == doctest::Approx(brute_alpha(pts)).epsilon(1e-8));
        CHECK(fit.rms_residual > 0.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_sqrt_law(std::vector<SnrPoint>{}), ParameterError);
        CHECK_THROWS_AS(fit_sqrt_law(std::vector<SnrPoint>{{0.5, 1}}), ParameterError);
        CHECK_THROWS_AS(fit_power_law(std::vector<SnrPoint>{{2, 1}, {2, 3}}), ParameterError);
    }
}

TEST_CASE("power-law fit is exact on power-law data") {
    std::vector<SnrPoint> pts;
    for (double n : {1, 2, 4, 9, 15}) pts.push_back({n, 1.7 * std::pow(n, 0.37)});
    const auto fit = fit_power_law(pts);
    CHECK(fit.exponent == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(fit.scale == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bilinear profile sampling reproduces a linear image") {
    RealImage img({20, 15});
    for (std::size_t y = 0; y < 15; ++y)
        for (std::size_t x = 0; x < 20; ++x) img.at(x, y) = 2.0 * x - 3.0 * y + 1;
    const ProfileLine line{1.25, 2.5, 17.0, 11.0};
    const auto p = sample_profile(img, line);
    REQUIRE(p.size() == std::size_t(std::floor(line.length())) + 1);
    const double ux = (line.x1 - line.x0) / line.length(), uy = (line.y1 - line.y0) / line.length();
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double x = line.x0 + k * ux, y = line.y0 + k * uy;
        CHECK(p[k] == doctest::Approx(2 * x - 3 * y + 1).epsilon(1e-12));
    }
    CHECK_THROWS_AS(sample_profile(img, {0, 0, 25, 0}), DimensionError);
    CHECK_THROWS_AS(sample_profile(img, {3, 3, 3.5, 3}), ParameterError);
}

TEST_CASE("edge sharpness ratio") {
    const Dims d{40, 8};
    const auto sharp = step_image(d, 19.5, 0.0, 1.0);
    const auto soft = step_image(d, 19.5, 0.0, 1.0, 1.5);
    const ProfileLine line{10, 4, 30, 4};

    CHECK(edge_sharpness(sharp, sharp, line).ratio == 1.0);
    CHECK(edge_sharpness(soft, soft, line).ratio == 1.0);
    CHECK(edge_sharpness(sharp, soft, line).ratio > 1.0);
    CHECK(edge_sharpness(soft, sharp, line).ratio < 1.0);

    // Each profile is normalized by its own range.
    RealImage scaled = soft;
    for (auto& v : scaled.values()) v = 10.0 * v + 3.0;
    CHECK(edge_sharpness(scaled, soft, line).ratio == doctest::Approx(1.0).epsilon(1e-12));

    // Central difference of a unit step sampled on the grid.
    CHECK(edge_sharpness(sharp, soft, line).peak_a == doctest::Approx(0.5));

    CHECK_THROWS_AS(edge_sharpness(RealImage(d, 2.0), sharp, line), DegenerateMeasurement);
}

TEST_CASE("resolution phantom edges") {
    const ResolutionPhantomSpec spec;
    const auto p = make_resolution_phantom(spec);
    REQUIRE(p.edge_lines.size() == 4);
    const auto mag = magnitude(p.image);
    for (const auto& line : p.edge_lines) {
        const auto prof = sample_profile(mag, line);
        const auto [lo, hi] = std::minmax_element(prof.begin(), prof.end());
        CHECK(*lo == spec.background);
        CHECK(*hi == spec.level);
        CHECK(peak_normalized_gradient(prof) == doctest::Approx(0.5));
    }
    // Two vertical edges are crossed by horizontal lines and vice versa.
    CHECK(p.edge_lines[0].y0 == p.edge_lines[0].y1);
    CHECK(p.edge_lines[1].y0 == p.edge_lines[1].y1);
    CHECK(p.edge_lines[2].x0 == p.edge_lines[2].x1);
    CHECK(p.edge_lines[3].x0 == p.edge_lines[3].x1);

    for (double v : mag.extract(p.flat)) CHECK(v == spec.level);

    REQUIRE(p.bar_groups.size() == spec.bar_widths.size());
    for (std::size_t g = 0; g < p.bar_groups.size(); ++g) {
        const auto& r = p.bar_groups[g];
        int transitions = 0;
        const std::size_t y = r.y0 + r.height / 2;
        for (std::size_t x = r.x0 - 1; x < r.x0 + r.width; ++x)
            transitions += mag.at(x, y) != mag.at(x + 1, y);
        CHECK(transitions == 6);
    }
    ResolutionPhantomSpec bad;
    bad.bar_widths = {30};
    CHECK_THROWS_AS(make_resolution_phantom(bad), ParameterError);
}

TEST_CASE("detection probability bookkeeping") {
    dro::DiskGridSpec spec;
    spec.diameters = {1, 4};
    spec.cnr_levels = {2.0, 8.0};
    const auto truth = dro::layout_disk_grid(spec);
    REQUIRE(truth.disks.size() == 4);

    std::vector<DetectionResponse> rs;
    for (std::uint64_t r = 0; r < 48; ++r)
        for (const auto& d : truth.disks) rs.push_back({d.id, r, d.diameter == 4 ? r % 2 == 0 : d.cnr > 5});

    const auto t = detection_probability(rs, truth);
    REQUIRE(t.cells.size() == 4);
    for (const auto& c : t.cells) {
        CHECK(c.trials == 48);
        CHECK(c.hits <= c.trials);
        if (c.diameter == 4) CHECK(c.probability() == 0.5);
        if (c.diameter == 1) CHECK(c.probability() == (c.cnr > 5 ? 1.0 : 0.0));
    }

    auto shuffled = rs;
    Rng rng(4);
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    const auto t2 = detection_probability(shuffled, truth);
    for (std::size_t i = 0; i < t.cells.size(); ++i) CHECK(t2.cells[i].hits == t.cells[i].hits);

    for (const auto& row : difference_table(t, t2)) CHECK(row.difference == 0.0);

    rs.push_back({99, 0, true});
    CHECK_THROWS_AS(detection_probability(rs, truth), ParameterError);

    dro::DiskGridSpec other = spec;
    other.cnr_levels = {2.0, 9.0};
    CHECK_THROWS_AS(difference_table(t, detection_probability({}, dro::layout_disk_grid(other))), ParameterError);
}

TEST_CASE("response files round-trip") {
    const std::vector<DetectionResponse> rs{{0, 0, true}, {3, 7, false}};
    const auto path = std::filesystem::temp_directory_path() / "mrdl_responses.json";
    write_responses(path, rs);
    CHECK(read_responses(path) == rs);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(responses_from_json(nlohmann::json::parse(R"([{"disk_id":1,"realization":0}])")), ConfigError);
    CHECK_THROWS_AS(
        responses_from_json(nlohmann::json::parse(R"([{"disk_id":1,"realization":0,"visible":true,"x":1}])")),
        ConfigError);
    CHECK_THROWS_AS(responses_from_json(nlohmann::json::parse(R"({"disk_id":1})")), ConfigError);
}

TEST_CASE("matched-filter proxy separates strong and absent disks") {
    dro::DiskGridSpec spec;
    spec.diameters = {1, 8};
    spec.cnr_levels = {0.5, 25.0};
    int strong = 0, weak = 0;
    constexpr int kReps = 20;
    for (int r = 0; r < kReps; ++r) {
        const auto g = dro::generate_disk_grid(spec, derive_seed(8, {std::uint64_t(r)}));
        for (const auto& resp : matched_filter_proxy(magnitude(g.image), g.truth, r)) {
            const auto& d = g.truth.find(resp.disk_id);
            if (d.cnr > 20) strong += resp.visible;
            if (d.cnr < 1 && d.diameter == 1) weak += resp.visible;
        }
    }
    CHECK(strong == 2 * kReps);
    CHECK(weak <= 1);
}

TEST_CASE("svg plot") {
    LinePlot p;
    p.title = "snr <vs> n";
    p.series = {{"d=0", {1, 2, 4}, {1, 1.4, 2}, false}, {"points", {1, 2}, {0.5, 0.7}, true}};
    const auto svg = render_svg(p);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(svg.find("snr &lt;vs&gt; n") != std::string::npos);
    CHECK(svg.find("d=0") != std::string::npos);
    p.series[0].y.pop_back();
    CHECK_THROWS_AS(render_svg(p), ParameterError);
}
