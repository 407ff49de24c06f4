#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mrdl/cli/studies.hpp"

using namespace mrdl;
using namespace mrdl::cli;
using nlohmann::json;

namespace fs = std::filesystem;

TEST_CASE("fnv1a matches published vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
    CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("experiment kinds round-trip") {
    for (auto k : {ExperimentKind::TrainModel, ExperimentKind::DiskGridStudy, ExperimentKind::SkeObserverStudy,
                   ExperimentKind::SnrAverages, ExperimentKind::Sharpness, ExperimentKind::DenoiseLevels})
        CHECK(experiment_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(experiment_kind_from_string("Bogus"), ConfigError);
}

TEST_CASE("top-level config validation") {
    CHECK_THROWS_AS(parse_experiment_config(json::array()), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config({{"seed", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config({{"kind", "Sharpness"}, {"sede", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config({{"kind", "Sharpness"}, {"seed", "one"}}), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config({{"kind", "Sharpness"}, {"params", 3}}), ConfigError);
    const auto cfg = parse_experiment_config({{"kind", "SnrAverages"}, {"seed", 9}, {"workers", 2}});
    CHECK(cfg.kind == ExperimentKind::SnrAverages);
    CHECK(cfg.seed == 9);
    CHECK(cfg.workers == 2);
    CHECK_FALSE(cfg.output.has_value());
}

TEST_CASE("unknown and out-of-range params are rejected at any depth") {
    auto bad = [](json params) {
        json c = {{"kind", "TrainModel"}, {"params", params}};
        CHECK_THROWS_AS(resolve_config(parse_experiment_config(c)), ConfigError);
    };
    bad({{"iteratons", 5}});
    bad({{"corpus", {{"patchh", 32}}}});
    bad({{"architecture", {{"kernel", 4}}}});
    bad({{"corpus", {{"augmentations", {"Flip", "Teleport"}}}}});
    bad({{"learning_rate", -1.0}});

    auto bad_ske = [](json params) {
        CHECK_THROWS_AS(resolve_config(parse_experiment_config({{"kind", "SkeObserverStudy"}, {"params", params}})),
                        ConfigError);
    };
    bad_ske({{"model", {{"train", {{"bogus", 1}}}}}});
    bad_ske({{"denoising_level", 1.5}});
}

TEST_CASE("resolved config fills defaults and hashes deterministically") {
    const auto a = resolve_config(parse_experiment_config({{"kind", "Sharpness"}, {"seed", 3}}));
    const auto b = resolve_config(
        parse_experiment_config({{"kind", "Sharpness"}, {"seed", 3}, {"params", {{"window", "hann"}}}}));
    CHECK(a == b);
    CHECK(fnv1a(a.dump()) == fnv1a(b.dump()));
    CHECK(a["params"].contains("size"));
    CHECK(a["params"].contains("profile_half_length"));
    const auto c = resolve_config(parse_experiment_config({{"kind", "Sharpness"}, {"seed", 4}}));
    CHECK(fnv1a(a.dump()) != fnv1a(c.dump()));
}

TEST_CASE("manifest feeds back as a config") {
    const fs::path dir = fs::temp_directory_path() / "mrdl_test_cli";
    fs::remove_all(dir);
    RunContext ctx;
    ctx.out = dir / "run";
    const json cfg = {{"kind", "TrainModel"},
                      {"seed", 11},
                      {"params",
                       {{"iterations", 3},
                        {"batch_size", 1},
                        {"probe_sigmas", {0.1}},
                        {"architecture", {{"depth", 2}, {"hidden_channels", 2}}},
                        {"corpus", {{"patch", 16}, {"margin", 4}}}}}};
    run_experiment(parse_experiment_config(cfg), ctx);
    CHECK(fs::exists(ctx.out / "summary.json"));
    CHECK(fs::exists(ctx.out / "model.json"));
    CHECK(fs::exists(ctx.out / "model.bin"));

    std::ifstream in(ctx.out / "manifest.json");
    const auto manifest = json::parse(in);
    CHECK(manifest["software"] == kSoftwareName);
    CHECK(manifest["version"] == kVersion);
    const auto again = read_experiment_config(ctx.out / "manifest.json");
    CHECK(resolve_config(again) == manifest["config"]);
    CHECK(manifest["config_hash"] == hex64(fnv1a(manifest["config"].dump())));
    fs::remove_all(dir);
}
