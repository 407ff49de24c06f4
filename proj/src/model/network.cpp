#include <bit>
#include <fstream>

#include <json.hpp>

#include "mrdl/model/network.hpp"
#include "mrdl/model/training.hpp"

namespace mrdl::model {

namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointVersion = 1;

fs::path stem_of(const fs::path& p) {
    fs::path s = p;
    if (s.extension() == ".json" || s.extension() == ".bin") s.replace_extension();
    return s;
}

}  // namespace

std::vector<LayerShape> Architecture::layers() const {
    if (depth < 2) throw ParameterError("network depth must be at least 2");
    if (hidden_channels == 0) throw ParameterError("hidden channel count must be positive");
    std::vector<LayerShape> out;
    for (std::size_t l = 0; l < depth; ++l) {
        LayerShape s;
        s.kernel_h = s.kernel_w = kernel;
        s.in_channels = l == 0 ? kInputChannels : hidden_channels;
        s.out_channels = l + 1 == depth ? kOutputChannels : hidden_channels;
        out.push_back(s);
    }
    return out;
}

void save_checkpoint(const fs::path& path, const DenoiseModel& model) {
    static_assert(std::endian::native == std::endian::little);
    const fs::path stem = stem_of(path);
    if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
    fs::path blob = stem;
    blob += ".bin";
    fs::path manifest = stem;
    manifest += ".json";

    nlohmann::json layers = nlohmann::json::array();
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw IoError("cannot open " + blob.string());
    for (std::size_t l = 0; l < model.shapes().size(); ++l) {
        const auto& s = model.shapes()[l];
        layers.push_back({{"kernel_h", s.kernel_h},
                          {"kernel_w", s.kernel_w},
                          {"in_channels", s.in_channels},
                          {"out_channels", s.out_channels},
                          {"activation", l + 1 == model.shapes().size() ? "linear" : "relu"},
                          {"weights", s.parameter_count()}});
        const auto& w = model.weights()[l];
        out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
    }
    nlohmann::json j = {{"format", "mrdl-denoise"},
                        {"version", kCheckpointVersion},
                        {"activation", "relu"},
                        {"final_activation", "linear"},
                        {"bias", false},
                        {"normalization", "none"},
                        {"padding", "zero-same"},
                        {"input", {"real", "imag"}},
                        {"outputs", {"ring_real", "ring_imag", "noise_real", "noise_imag"}},
                        {"dtype", "f32"},
                        {"weight_order", "out,in,kh,kw"},
                        {"parameter_count", model.parameter_count()},
                        {"receptive_field", model.receptive_field()},
                        {"blob", blob.filename().string()},
                        {"layers", layers}};
    std::ofstream m(manifest);
    if (!m) throw IoError("cannot open " + manifest.string());
    m << j.dump(2) << "\n";
}

DenoiseModel load_checkpoint(const fs::path& path) {
    const fs::path stem = stem_of(path);
    fs::path manifest = stem;
    manifest += ".json";
    std::ifstream m(manifest);
    if (!m) throw IoError("cannot open " + manifest.string());
    nlohmann::json j;
    try {
        m >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    if (j.value("format", "") != "mrdl-denoise" || j.value("version", 0) != kCheckpointVersion)
        throw IoError(manifest.string() + ": unsupported checkpoint format");
    if (j.value("bias", true)) throw IoError(manifest.string() + ": bias terms are not supported");

    std::vector<LayerShape> shapes;
    for (const auto& l : j.at("layers"))
        shapes.push_back({l.at("kernel_h").get<std::size_t>(), l.at("kernel_w").get<std::size_t>(),
                          l.at("in_channels").get<std::size_t>(), l.at("out_channels").get<std::size_t>()});
    DenoiseModel model(shapes);

    const fs::path blob = stem.parent_path() / j.at("blob").get<std::string>();
    std::ifstream in(blob, std::ios::binary);
    if (!in) throw IoError("cannot open " + blob.string());
    for (auto& w : model.weights()) {
        in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
        if (!in) throw IoError(blob.string() + ": truncated weight data");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(blob.string() + ": trailing bytes after weights");
    return model;
}

}  // namespace mrdl::model
