#include "stainbench/config.hpp"

#include "stainbench/error.hpp"
#include "stainbench/hash.hpp"
#include "stainbench/profile_io.hpp"

#include <fstream>

namespace stainbench {

using nlohmann::json;

json to_json(const RunConfig& c) {
    return {
        {"method", c.method},
        {"stain", to_json(c.stain)},
        {"tiling", {{"tile_size", c.tiling.tile_size},
                    {"stride", c.tiling.stride},
                    {"min_tissue_fraction", c.tiling.min_tissue_fraction},
                    {"od_threshold", c.tiling.od_threshold},
                    {"subsample2", c.tiling.subsample2}}},
        {"extractor", c.extractor},
        {"seed", c.seed},
        {"wd_sample_cap", c.wd_sample_cap},
        {"ssim_window", c.ssim_window},
        {"report", {{"per_direction", c.report.per_direction}, {"decimals", c.report.decimals}}},
        {"inputs", c.inputs},
    };
}

namespace {

void reject_unknown(const json& patch, const json& known, const std::string& where) {
    if (!patch.is_object()) return;
    for (const auto& [key, value] : patch.items()) {
        if (!known.contains(key)) throw UsageError("unknown config key '" + where + key + "'");
        if (value.is_object() && known.at(key).is_object() && key != "inputs") {
            reject_unknown(value, known.at(key), where + key + ".");
        }
    }
}

} // namespace

RunConfig config_from_json(const json& patch, const RunConfig& base) {
    if (!patch.is_object()) throw UsageError("config must be a JSON object");
    json doc = to_json(base);
    reject_unknown(patch, doc, "");
    doc.merge_patch(patch);
    try {
        RunConfig c;
        c.method = doc.at("method").get<std::string>();
        if (c.method != "colorstat") parse_stain_method(c.method);
        c.stain = stain_params_from_json(doc.at("stain"));
        const json& t = doc.at("tiling");
        c.tiling.tile_size = t.at("tile_size").get<int>();
        c.tiling.stride = t.at("stride").get<int>();
        c.tiling.min_tissue_fraction = t.at("min_tissue_fraction").get<double>();
        c.tiling.od_threshold = t.at("od_threshold").get<double>();
        c.tiling.subsample2 = t.at("subsample2").get<bool>();
        c.extractor = doc.at("extractor").get<std::string>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.wd_sample_cap = doc.at("wd_sample_cap").get<std::size_t>();
        c.ssim_window = doc.at("ssim_window").get<int>();
        c.report.per_direction = doc.at("report").at("per_direction").get<bool>();
        c.report.decimals = doc.at("report").at("decimals").get<int>();
        c.inputs = doc.at("inputs").get<std::map<std::string, std::string>>();
        return c;
    } catch (const json::exception& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path.string());
    try {
        return config_from_json(json::parse(in), base);
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::string config_hash(const RunConfig& config) {
    return sha256_hex(to_json(config).dump()).substr(0, 16);
}

} // namespace stainbench
