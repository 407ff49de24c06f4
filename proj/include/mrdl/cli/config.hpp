#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrdl/core/error.hpp"

namespace mrdl::cli {

inline constexpr const char* kSoftwareName = "mrdl";
inline constexpr const char* kVersion = "0.4.0";

enum class ExperimentKind { TrainModel, DiskGridStudy, SkeObserverStudy, SnrAverages, Sharpness, DenoiseLevels };

const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

/// Reads one JSON object. Every key read is recorded with its resolved value
/// (explicit or default) so the full configuration can be written back out.
/// finish() rejects keys that were never read.
class ParamReader {
public:
    ParamReader(const nlohmann::json& object, std::string context);

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        T value = fallback;
        if (obj_.contains(key)) {
            try {
                value = obj_.at(key).get<T>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError(path(key) + ": wrong type");
            }
        }
        resolved_[key] = value;
        return value;
    }

    /// Nested object; absent means empty. `fn` reads it through a child reader.
    void object(const std::string& key, const std::function<void(ParamReader&)>& fn);

    bool has(const std::string& key) const { return obj_.contains(key); }
    std::string path(const std::string& key) const { return context_ + "." + key; }
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    void finish() const;
    const nlohmann::json& resolved() const { return resolved_; }

private:
    nlohmann::json obj_;
    std::string context_;
    std::set<std::string> seen_;
    nlohmann::json resolved_ = nlohmann::json::object();
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::TrainModel;
    std::uint64_t seed = 0;
    std::optional<std::string> output;  // relative paths resolve against the output root
    std::size_t workers = 0;            // 0: all cores
    nlohmann::json params = nlohmann::json::object();
};

/// Top-level keys: kind, seed, output, workers, params. Throws ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace mrdl::cli
