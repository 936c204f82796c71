#pragma once

#include "stainbench/datapipe.hpp"
#include "stainbench/stain.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace stainbench {

struct ReportOptions {
    bool per_direction = false;
    int decimals = 2;
};

// Every knob a command can read. Paths are not part of it; the manifests a run
// consumed are recorded by content hash instead.
struct RunConfig {
    std::string method = "macenko";
    StainFitParams stain;
    TileExtractionParams tiling;
    std::string extractor = "builtin";
    std::uint64_t seed = 0;
    std::size_t wd_sample_cap = 1'000'000;
    int ssim_window = 7;
    ReportOptions report;
    // Role ("source", "generated", ...) -> manifest hash.
    std::map<std::string, std::string> inputs;
};

// Fully materialised document, defaults included.
nlohmann::json to_json(const RunConfig& config);

// Applies `patch` (a possibly partial document) on top of `base`. Unknown keys
// are rejected.
RunConfig config_from_json(const nlohmann::json& patch, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

// First 16 hex digits of the SHA-256 of the materialised config.
std::string config_hash(const RunConfig& config);

} // namespace stainbench
