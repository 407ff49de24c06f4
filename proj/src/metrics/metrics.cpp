#include "mrdl/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace mrdl::metrics {

namespace {

struct RoiStats {
    double mean = 0.0;
    double std = 0.0;  // sample std
};

RoiStats roi_stats(std::span<const double> v) {
    if (v.size() < 2) throw DegenerateMeasurement("roi holds fewer than two pixels");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    return out;
}

}  // namespace

SnrMeasurement snr_pair(const RealImage& img1, const RealImage& img2, const Roi& roi, std::size_t averages) {
    if (img1.dims() != img2.dims()) throw DimensionError("snr_pair needs images of identical size");
    if (!roi.fits(img1.dims())) throw DimensionError("snr roi outside image bounds");
    const auto a = img1.extract(roi);
    const auto b = img2.extract(roi);
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];

    SnrMeasurement m;
    m.signal = roi_stats(a).mean;
    m.sigma = roi_stats(diff).std;
    if (!(m.sigma > 0.0)) throw DegenerateMeasurement("difference image has zero spread; were the images identical?");
    m.snr = m.signal / (m.sigma / std::sqrt(2.0));
    m.roi = roi;
    m.averages = averages;
    return m;
}

SqrtLawFit fit_sqrt_law(std::span<const SnrPoint> points) {
    if (points.empty()) throw ParameterError("fit_sqrt_law needs at least one point");
    double num = 0.0, den = 0.0;
    for (const auto& p : points) {
        if (!(p.averages >= 1.0)) throw ParameterError("averages must be >= 1");
        num += p.snr * std::sqrt(p.averages);
        den += p.averages;
    }
    SqrtLawFit fit{num / den, 0.0};
    double ss = 0.0;
    for (const auto& p : points) {
        const double r = p.snr - fit.alpha * std::sqrt(p.averages);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

PowerLawFit fit_power_law(std::span<const SnrPoint> points) {
    if (points.size() < 2) throw ParameterError("power-law fit needs at least two points");
    double sx = 0, sy = 0;
    for (const auto& p : points) {
        if (!(p.averages > 0.0 && p.snr > 0.0)) throw ParameterError("power-law fit needs positive values");
        sx += std::log(p.averages);
        sy += std::log(p.snr);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : points) {
        const double dx = std::log(p.averages) - mx, dy = std::log(p.snr) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ParameterError("power-law fit needs two distinct averages");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.scale = std::exp(my - fit.exponent * mx);
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double cnr(double amplitude, double noise_std) {
    if (!(noise_std > 0.0)) throw ParameterError("noise std must be positive");
    return amplitude / noise_std;
}

double ProfileLine::length() const { return std::hypot(x1 - x0, y1 - y0); }

std::vector<double> sample_profile(const RealImage& image, const ProfileLine& line) {
    const double len = line.length();
    if (!(len >= 1.0)) throw ParameterError("profile line shorter than one pixel");
    const auto n = static_cast<std::size_t>(std::floor(len)) + 1;
    const double ux = (line.x1 - line.x0) / len, uy = (line.y1 - line.y0) / len;
    const double xmax = static_cast<double>(image.width() - 1), ymax = static_cast<double>(image.height() - 1);

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = line.x0 + ux * static_cast<double>(k);
        const double y = line.y0 + uy * static_cast<double>(k);
        if (x < -1e-9 || y < -1e-9 || x > xmax + 1e-9 || y > ymax + 1e-9)
            throw DimensionError("profile line leaves the image");
        const double cx = std::clamp(x, 0.0, xmax), cy = std::clamp(y, 0.0, ymax);
        const auto ix = std::min(static_cast<std::size_t>(cx), image.width() - 1);
        const auto iy = std::min(static_cast<std::size_t>(cy), image.height() - 1);
        const auto jx = std::min(ix + 1, image.width() - 1);
        const auto jy = std::min(iy + 1, image.height() - 1);
        const double fx = cx - static_cast<double>(ix), fy = cy - static_cast<double>(iy);
        out[k] = (1 - fx) * (1 - fy) * image.at(ix, iy) + fx * (1 - fy) * image.at(jx, iy) +
                 (1 - fx) * fy * image.at(ix, jy) + fx * fy * image.at(jx, jy);
    }
    return out;
}

double peak_normalized_gradient(std::span<const double> profile) {
    if (profile.size() < 3) throw DegenerateMeasurement("profile needs at least three samples");
    const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) throw DegenerateMeasurement("flat profile");
    double peak = 0.0;
    for (std::size_t i = 1; i + 1 < profile.size(); ++i)
        peak = std::max(peak, std::abs(profile[i + 1] - profile[i - 1]) / (2.0 * range));
    if (!(peak > 0.0)) throw DegenerateMeasurement("profile has no interior slope");
    return peak;
}

SharpnessResult edge_sharpness(const RealImage& img_a, const RealImage& img_b, const ProfileLine& line) {
    SharpnessResult r;
    r.line = line;
    r.peak_a = peak_normalized_gradient(sample_profile(img_a, line));
    r.peak_b = peak_normalized_gradient(sample_profile(img_b, line));
    r.ratio = r.peak_a / r.peak_b;
    return r;
}

void ResolutionPhantomSpec::validate() const {
    if (size < 64) throw ParameterError("resolution phantom needs size >= 64");
    if (level == background) throw ParameterError("phantom level must differ from background");
    if (profile_half_length < 2 || profile_half_length > size / 8)
        throw ParameterError("profile half length must lie in [2, size / 8]");
    if (bar_widths.empty()) throw ParameterError("at least one bar width is required");
    const std::size_t column = size - (size / 2 + size / 8) - size / 16;
    for (auto w : bar_widths)
        if (w == 0 || 5 * w > column) throw ParameterError("bar width does not fit the bar column");
}

ResolutionPhantom make_resolution_phantom(const ResolutionPhantomSpec& spec) {
    spec.validate();
    const std::size_t s = spec.size;
    ResolutionPhantom p;
    p.image = ComplexField({s, s}, Domain::Image);
    for (auto& v : p.image.samples()) v = spec.background;

    const std::size_t bx0 = s / 6, bx1 = s / 2, by0 = s / 6, by1 = s - s / 6;
    for (std::size_t y = by0; y < by1; ++y)
        for (std::size_t x = bx0; x < bx1; ++x) p.image.at(x, y) = spec.level;

    p.flat = Roi{bx0 + (bx1 - bx0) / 4, by0 + (by1 - by0) / 4, (bx1 - bx0) / 2, (by1 - by0) / 2};

    const double h = static_cast<double>(spec.profile_half_length);
    const double xc = 0.5 * static_cast<double>(bx0 + bx1), yc = 0.5 * static_cast<double>(by0 + by1);
    const auto edge = [](std::size_t first_inside) { return static_cast<double>(first_inside) - 0.5; };
    p.edge_lines = {
        {edge(bx0) - h, yc, edge(bx0) + h, yc},
        {edge(bx1) - h, yc, edge(bx1) + h, yc},
        {xc, edge(by0) - h, xc, edge(by0) + h},
        {xc, edge(by1) - h, xc, edge(by1) + h},
    };

    // Bar groups: three vertical bars of width w separated by gaps of w.
    const std::size_t col0 = s / 2 + s / 8;
    const std::size_t slot = (by1 - by0) / spec.bar_widths.size();
    for (std::size_t g = 0; g < spec.bar_widths.size(); ++g) {
        const std::size_t w = spec.bar_widths[g];
        const std::size_t y0 = by0 + g * slot + 2, y1 = by0 + (g + 1) * slot - 2;
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = col0 + 2 * b * w; x < col0 + (2 * b + 1) * w; ++x) p.image.at(x, y) = spec.level;
        p.bar_groups.push_back(Roi{col0, y0, 5 * w, y1 - y0});
    }
    return p;
}

std::vector<DetectionResponse> responses_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("responses must be a JSON array");
    std::vector<DetectionResponse> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_object()) throw ConfigError("each response must be an object");
        for (const auto& [key, value] : e.items())
            if (key != "disk_id" && key != "realization" && key != "visible")
                throw ConfigError("unknown response key '" + key + "'");
        try {
            out.push_back({e.at("disk_id").get<std::size_t>(), e.at("realization").get<std::uint64_t>(),
                           e.at("visible").get<bool>()});
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(std::string("malformed response: ") + ex.what());
        }
    }
    return out;
}

nlohmann::json to_json(std::span<const DetectionResponse> responses) {
    auto j = nlohmann::json::array();
    for (const auto& r : responses)
        j.push_back({{"disk_id", r.disk_id}, {"realization", r.realization}, {"visible", r.visible}});
    return j;
}

std::vector<DetectionResponse> read_responses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return responses_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_responses(const std::filesystem::path& path, std::span<const DetectionResponse> responses) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << to_json(responses).dump(1) << '\n';
}

DetectionTable detection_probability(std::span<const DetectionResponse> responses, const dro::GroundTruthMap& truth) {
    DetectionTable t;
    for (const auto& d : truth.disks) {
        if (std::find(t.diameters.begin(), t.diameters.end(), d.diameter) == t.diameters.end())
            t.diameters.push_back(d.diameter);
        if (std::find(t.cnr_levels.begin(), t.cnr_levels.end(), d.cnr) == t.cnr_levels.end())
            t.cnr_levels.push_back(d.cnr);
    }
    t.cells.resize(t.diameters.size() * t.cnr_levels.size());
    for (std::size_t c = 0; c < t.cnr_levels.size(); ++c)
        for (std::size_t i = 0; i < t.diameters.size(); ++i) {
            auto& cell = t.cells[c * t.diameters.size() + i];
            cell.diameter = t.diameters[i];
            cell.cnr = t.cnr_levels[c];
        }

    const auto index_of = [](const auto& v, const auto& x) {
        return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
    };
    for (const auto& r : responses) {
        const auto& disk = truth.find(r.disk_id);
        auto& cell = t.cells[index_of(t.cnr_levels, disk.cnr) * t.diameters.size() + index_of(t.diameters, disk.diameter)];
        ++cell.trials;
        if (r.visible) ++cell.hits;
    }
    return t;
}

std::vector<DetectionDifference> difference_table(const DetectionTable& a, const DetectionTable& b) {
    if (a.diameters != b.diameters || a.cnr_levels != b.cnr_levels)
        throw ParameterError("detection tables cover different grids");
    std::vector<DetectionDifference> out;
    out.reserve(a.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const double pa = a.cells[i].probability(), pb = b.cells[i].probability();
        out.push_back({a.cells[i].diameter, a.cells[i].cnr, pa, pb, pa - pb});
    }
    return out;
}

std::vector<DetectionResponse> matched_filter_proxy(const RealImage& image, const dro::GroundTruthMap& truth,
                                                    std::uint64_t realization, double threshold) {
    if (image.dims() != truth.dims) throw DimensionError("image does not match the ground-truth layout");
    std::vector<DetectionResponse> out;
    out.reserve(truth.disks.size());
    for (const auto& d : truth.disks) {
        const double r_in = 0.5 * d.diameter + 1.0, r_out = 0.5 * d.diameter + 3.5;
        const auto lo = [](double c, double r) { return static_cast<std::size_t>(std::max(0.0, std::floor(c - r))); };
        const auto hi = [](double c, double r, std::size_t n) {
            return std::min(n, static_cast<std::size_t>(std::ceil(c + r)) + 1);
        };
        std::vector<double> inside, ring;
        for (std::size_t y = lo(d.cy, r_out); y < hi(d.cy, r_out, image.height()); ++y)
            for (std::size_t x = lo(d.cx, r_out); x < hi(d.cx, r_out, image.width()); ++x) {
                const double rr = std::hypot(static_cast<double>(x) - d.cx, static_cast<double>(y) - d.cy);
                if (dro::inside_disk(d, x, y))
                    inside.push_back(image.at(x, y));
                else if (rr > r_in && rr <= r_out)
                    ring.push_back(image.at(x, y));
            }
        bool visible = false;
        if (!inside.empty() && ring.size() >= 2) {
            double mi = 0;
            for (double v : inside) mi += v;
            mi /= static_cast<double>(inside.size());
            const auto bg = roi_stats(ring);
            const double se = bg.std * std::sqrt(1.0 / static_cast<double>(inside.size()) +
                                                 1.0 / static_cast<double>(ring.size()));
            visible = se > 0.0 && (mi - bg.mean) / se > threshold;
        }
        out.push_back({d.id, realization, visible});
    }
    return out;
}

void write_detection_csv(const std::filesystem::path& path, const DetectionTable& table) {
    auto out = open_csv(path);
    out << "diameter,cnr,trials,hits,probability\n";
    char buf[128];
    for (const auto& c : table.cells) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%zu,%zu,%.6f\n", c.diameter, c.cnr, c.trials, c.hits, c.probability());
        out << buf;
    }
}

void write_difference_csv(const std::filesystem::path& path, std::span<const DetectionDifference> rows) {
    auto out = open_csv(path);
    out << "diameter,cnr,p_a,p_b,difference\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", r.diameter, r.cnr, r.p_a, r.p_b, r.difference);
        out << buf;
    }
}

void write_snr_csv(const std::filesystem::path& path, std::span<const SnrSeriesRow> rows) {
    auto out = open_csv(path);
    out << "pipeline,level,averages,signal,sigma,snr\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%zu,%.9g,%.9g,%.9g\n", r.pipeline.c_str(), r.level, r.m.averages,
                      r.m.signal, r.m.sigma, r.m.snr);
        out << buf;
    }
}

}  // namespace mrdl::metrics
