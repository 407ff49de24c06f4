#include "mrdl/cli/config.hpp"

#include <cstdio>
#include <fstream>

namespace mrdl::cli {

namespace {

constexpr std::pair<ExperimentKind, const char*> kKinds[] = {
    {ExperimentKind::TrainModel, "TrainModel"},
    {ExperimentKind::DiskGridStudy, "DiskGridStudy"},
    {ExperimentKind::SkeObserverStudy, "SkeObserverStudy"},
    {ExperimentKind::SnrAverages, "SnrAverages"},
    {ExperimentKind::Sharpness, "Sharpness"},
    {ExperimentKind::DenoiseLevels, "DenoiseLevels"},
};

}  // namespace

const char* to_string(ExperimentKind k) {
    for (const auto& [kind, name] : kKinds)
        if (kind == k) return name;
    return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kKinds)
        if (s == name) return kind;
    std::string known;
    for (const auto& [kind, name] : kKinds) known += std::string(known.empty() ? "" : ", ") + name;
    throw ConfigError("unknown experiment kind '" + std::string(s) + "' (expected one of " + known + ")");
}

ParamReader::ParamReader(const nlohmann::json& object, std::string context)
    : obj_(object.is_null() ? nlohmann::json::object() : object), context_(std::move(context)) {
    if (!obj_.is_object()) throw ConfigError(context_ + ": expected an object");
}

void ParamReader::object(const std::string& key, const std::function<void(ParamReader&)>& fn) {
    seen_.insert(key);
    ParamReader child(obj_.contains(key) ? obj_.at(key) : nlohmann::json::object(), path(key));
    fn(child);
    child.finish();
    resolved_[key] = child.resolved();
}

void ParamReader::fail(const std::string& key, const std::string& message) const {
    throw ConfigError(path(key) + ": " + message);
}

void ParamReader::finish() const {
    for (const auto& [key, value] : obj_.items())
        if (!seen_.contains(key)) throw ConfigError(path(key) + ": unknown key");
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    ParamReader r(j, "config");
    ExperimentConfig cfg;
    if (!r.has("kind")) throw ConfigError("config.kind: required");
    cfg.kind = experiment_kind_from_string(r.get<std::string>("kind", ""));
    cfg.seed = r.get<std::uint64_t>("seed", 0);
    if (r.has("output")) cfg.output = r.get<std::string>("output", "");
    cfg.workers = r.get<std::size_t>("workers", 0);
    if (r.has("params")) {
        if (!j.at("params").is_object()) throw ConfigError("config.params: expected an object");
        cfg.params = r.get<nlohmann::json>("params", nlohmann::json::object());
    } else {
        r.get<nlohmann::json>("params", nlohmann::json::object());
    }
    r.finish();
    return cfg;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    // A run manifest carries its resolved config and can be fed back in.
    if (j.is_object() && j.contains("software") && j.contains("config")) return parse_experiment_config(j.at("config"));
    return parse_experiment_config(j);
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace mrdl::cli
