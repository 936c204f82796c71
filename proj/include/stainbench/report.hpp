#pragma once

#include "stainbench/datapipe.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stainbench {

enum class Direction { HeToMt, MtToHe, Averaged };

const char* to_string(Direction direction) noexcept;
// Accepts "HE->MT", "he2mt", "MT->HE", "mt2he", "averaged".
Direction parse_direction(const std::string& text);

struct ReportRow {
    std::string method;
    Direction direction = Direction::HeToMt;
    Split split = Split::Val;
    double fid = 0.0;
    double wd = 0.0;
    double ssim_mean = 0.0;
    double ssim_stderr = 0.0;
    std::size_t n_pairs = 0;
    std::string extractor_name;
    std::string config_hash;
};

struct EvaluationReport {
    std::vector<ReportRow> rows;
    // config hash -> materialised config
    std::map<std::string, nlohmann::json> configs;

    // Replaces any row with the same (method, direction, split).
    void upsert(const ReportRow& row, const nlohmann::json& config);

    // Recomputes every averaged row from the two direction rows of the same
    // method and split; pairs with a missing direction get no averaged row.
    void rebuild_averages();

    // Throws NumericalError if an averaged row is not the mean of its directions.
    void check_averages() const;

    // Canonical row order: method, split, direction.
    void sort_rows();
};

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);
void save_report(const std::filesystem::path& path, const EvaluationReport& report);
EvaluationReport load_report(const std::filesystem::path& path);

struct RenderOptions {
    bool per_direction = false;
    int decimals = 2;
};

// Long-form CSV, one line per rendered row; WD is given both raw and x10^4.
std::string render_csv(const EvaluationReport& report, const RenderOptions& options = {});

// Markdown table with one column group per split present. Methods are ordered
// by averaged validation FID ascending; the per-direction mode emits HE->MT then
// MT->HE rows for each method.
std::string render_markdown(const EvaluationReport& report, const RenderOptions& options = {});

} // namespace stainbench
