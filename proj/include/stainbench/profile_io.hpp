#pragma once

#include "stainbench/stain.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <variant>

namespace stainbench {

using AnyProfile = std::variant<ColorStatProfile, StainProfile>;

inline constexpr int kProfileFormatVersion = 1;

nlohmann::json profile_to_json(const AnyProfile& profile);
AnyProfile profile_from_json(const nlohmann::json& doc);

void save_profile(const std::filesystem::path& path, const AnyProfile& profile);
AnyProfile load_profile(const std::filesystem::path& path);

nlohmann::json to_json(const StainFitParams& params);
StainFitParams stain_params_from_json(const nlohmann::json& doc);

} // namespace stainbench
