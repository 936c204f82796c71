#pragma once

#include "stainbench/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stainbench::cli {

struct TileArgs {
    std::vector<std::filesystem::path> inputs;
    // DIR entries indexed as already-cut tiles instead of cutting images.
    std::vector<std::filesystem::path> index_dirs;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> manifest;
    std::string label = "HE";
    std::string split = "train";
    std::string source_id;
};

struct FitArgs {
    std::filesystem::path manifest;
    std::optional<std::string> label;
    std::optional<std::string> split;
    std::filesystem::path out;
};

struct TransferArgs {
    std::filesystem::path profile;
    std::filesystem::path manifest;
    std::optional<std::string> label;
    std::optional<std::string> split;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> out_manifest;
    std::optional<std::filesystem::path> timing;
    std::optional<std::string> solver;
};

struct EvaluateArgs {
    std::filesystem::path source;
    std::filesystem::path generated;
    std::filesystem::path target;
    std::string method_name;
    std::string direction;
    std::string split = "val";
    std::filesystem::path out;
    bool append = false;
    std::optional<std::filesystem::path> feature_cache;
};

struct ReportArgs {
    std::filesystem::path input;
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> markdown;
};

struct BlindMixArgs {
    std::optional<std::filesystem::path> real;
    std::optional<std::filesystem::path> artificial;
    std::size_t n_each = 200;
    std::optional<std::filesystem::path> sheet;
    std::filesystem::path key;
    std::optional<std::filesystem::path> score;
};

void cmd_tile(const TileArgs& args, const RunConfig& config);
void cmd_fit(const FitArgs& args, const RunConfig& config);
void cmd_transfer(const TransferArgs& args, const RunConfig& config);
void cmd_evaluate(const EvaluateArgs& args, RunConfig config);
void cmd_report(const ReportArgs& args, const RunConfig& config);
void cmd_blindmix(const BlindMixArgs& args, const RunConfig& config);

} // namespace stainbench::cli
