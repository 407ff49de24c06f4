#include "mrdl/core/field_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace mrdl {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "field I/O assumes a little-endian host");

fs::path with_ext(const fs::path& path, const char* ext) {
    fs::path p = path;
    if (p.extension() == ".f32" || p.extension() == ".json") p.replace_extension();
    p += ext;
    return p;
}

}  // namespace

void write_field(const fs::path& path, const ComplexField& field) {
    const auto blob = with_ext(path, ".f32");
    const auto meta = with_ext(path, ".json");
    if (blob.has_parent_path()) fs::create_directories(blob.parent_path());

    std::vector<float> planar(2 * field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        planar[i] = static_cast<float>(field[i].real());
        planar[field.size() + i] = static_cast<float>(field[i].imag());
    }
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw IoError("cannot open " + blob.string());
    out.write(reinterpret_cast<const char*>(planar.data()),
              static_cast<std::streamsize>(planar.size() * sizeof(float)));

    nlohmann::json j = {{"width", field.width()},
                        {"height", field.height()},
                        {"domain", std::string(to_string(field.domain()))},
                        {"dtype", "f32"},
                        {"layout", "planar-ri"}};
    std::ofstream m(meta);
    if (!m) throw IoError("cannot open " + meta.string());
    m << j.dump(2) << "\n";
}

ComplexField read_field(const fs::path& path) {
    const auto blob = with_ext(path, ".f32");
    const auto meta = with_ext(path, ".json");
    std::ifstream m(meta);
    if (!m) throw IoError("cannot open " + meta.string());
    nlohmann::json j;
    try {
        m >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed sidecar " + meta.string() + ": " + e.what());
    }
    if (j.value("dtype", "") != "f32" || j.value("layout", "") != "planar-ri")
        throw IoError(meta.string() + ": unsupported dtype/layout");
    const Dims dims{j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>()};
    const Domain domain = domain_from_string(j.at("domain").get<std::string>());

    std::vector<float> planar(2 * dims.count());
    std::ifstream in(blob, std::ios::binary);
    if (!in) throw IoError("cannot open " + blob.string());
    in.read(reinterpret_cast<char*>(planar.data()),
            static_cast<std::streamsize>(planar.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(planar.size() * sizeof(float)))
        throw IoError(blob.string() + ": truncated sample data");

    std::vector<Complex> samples(dims.count());
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = Complex(planar[i], planar[dims.count() + i]);
    return ComplexField(dims, domain, std::move(samples));
}

void write_png(const fs::path& path, const RealImage& image, PngScale scale) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto values = image.values();
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;

    std::vector<std::uint8_t> pixels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double t = 0.0;
        if (scale == PngScale::Linear) {
            t = hi > lo ? (values[i] - lo) / (hi - lo) : 0.0;
        } else {
            const double vmax = std::max(std::abs(hi), std::abs(lo));
            t = vmax > 0 ? std::log1p(std::abs(values[i]) / vmax * 1000.0) / std::log1p(1000.0) : 0.0;
        }
        pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
    }

    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, pixels.data(), 0, nullptr))
        throw IoError("png write failed for " + path.string() + ": " + png.message);
}

}  // namespace mrdl
