#include "stainbench/report.hpp"

#include "stainbench/error.hpp"
#include "stainbench/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <tuple>

namespace stainbench {

using nlohmann::json;

const char* to_string(Direction direction) noexcept {
    switch (direction) {
    case Direction::HeToMt: return "HE->MT";
    case Direction::MtToHe: return "MT->HE";
    case Direction::Averaged: return "averaged";
    }
    return "averaged";
}

Direction parse_direction(const std::string& text) {
    std::string t;
    for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "he->mt" || t == "he2mt" || t == "h&e->mt") return Direction::HeToMt;
    if (t == "mt->he" || t == "mt2he" || t == "mt->h&e") return Direction::MtToHe;
    if (t == "averaged" || t == "avg") return Direction::Averaged;
    throw UsageError("unknown direction '" + text + "' (expected he2mt, mt2he or averaged)");
}

namespace {

auto row_key(const ReportRow& r) {
    return std::make_tuple(r.method, static_cast<int>(r.split), static_cast<int>(r.direction));
}

const ReportRow* find_row(const std::vector<ReportRow>& rows, const std::string& method, Split split,
                          Direction direction) {
    for (const auto& r : rows) {
        if (r.method == method && r.split == split && r.direction == direction) return &r;
    }
    return nullptr;
}

ReportRow average_of(const ReportRow& a, const ReportRow& b) {
    ReportRow r;
    r.method = a.method;
    r.direction = Direction::Averaged;
    r.split = a.split;
    r.fid = 0.5 * (a.fid + b.fid);
    r.wd = 0.5 * (a.wd + b.wd);
    r.ssim_mean = 0.5 * (a.ssim_mean + b.ssim_mean);
    r.ssim_stderr = 0.5 * (a.ssim_stderr + b.ssim_stderr);
    r.n_pairs = a.n_pairs + b.n_pairs;
    r.extractor_name = a.extractor_name == b.extractor_name ? a.extractor_name
                                                            : a.extractor_name + "|" + b.extractor_name;
    r.config_hash = a.config_hash == b.config_hash ? a.config_hash
                                                   : sha256_hex(a.config_hash + "+" + b.config_hash).substr(0, 16);
    return r;
}

} // namespace

void EvaluationReport::upsert(const ReportRow& row, const json& config) {
    if (row.direction == Direction::Averaged) throw UsageError("averaged rows are derived, not inserted");
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) { return row_key(r) == row_key(row); });
    if (it != rows.end()) {
        *it = row;
    } else {
        rows.push_back(row);
    }
    configs[row.config_hash] = config;
    rebuild_averages();
}

void EvaluationReport::rebuild_averages() {
    std::erase_if(rows, [](const ReportRow& r) { return r.direction == Direction::Averaged; });
    std::vector<ReportRow> averaged;
    for (const auto& r : rows) {
        if (r.direction != Direction::HeToMt) continue;
        if (const ReportRow* other = find_row(rows, r.method, r.split, Direction::MtToHe)) {
            averaged.push_back(average_of(r, *other));
        }
    }
    rows.insert(rows.end(), averaged.begin(), averaged.end());
    sort_rows();
}

void EvaluationReport::check_averages() const {
    const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };
    for (const auto& r : rows) {
        if (r.direction != Direction::Averaged) continue;
        const ReportRow* a = find_row(rows, r.method, r.split, Direction::HeToMt);
        const ReportRow* b = find_row(rows, r.method, r.split, Direction::MtToHe);
        if (!a || !b) {
            throw NumericalError("averaged row for " + r.method + "/" + to_string(r.split) +
                                 " has no matching direction rows");
        }
        const ReportRow want = average_of(*a, *b);
        if (!close(r.fid, want.fid) || !close(r.wd, want.wd) || !close(r.ssim_mean, want.ssim_mean) ||
            !close(r.ssim_stderr, want.ssim_stderr)) {
            throw NumericalError("averaged row for " + r.method + "/" + to_string(r.split) +
                                 " is not the mean of its direction rows");
        }
    }
}

void EvaluationReport::sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) { return row_key(a) < row_key(b); });
}

json report_to_json(const EvaluationReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"method", r.method},
                        {"direction", to_string(r.direction)},
                        {"split", to_string(r.split)},
                        {"fid", r.fid},
                        {"wd", r.wd},
                        {"ssim_mean", r.ssim_mean},
                        {"ssim_stderr", r.ssim_stderr},
                        {"n_pairs", r.n_pairs},
                        {"extractor_name", r.extractor_name},
                        {"config_hash", r.config_hash}});
    }
    json configs = json::object();
    for (const auto& [hash, config] : report.configs) configs[hash] = config;
    return {{"format", "stainbench.report"}, {"version", 1}, {"rows", rows}, {"configs", configs}};
}

EvaluationReport report_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "stainbench.report" || doc.at("version").get<int>() != 1) {
            throw DataError("unsupported report format");
        }
        EvaluationReport report;
        for (const auto& j : doc.at("rows")) {
            ReportRow r;
            r.method = j.at("method").get<std::string>();
            r.direction = parse_direction(j.at("direction").get<std::string>());
            r.split = parse_split(j.at("split").get<std::string>());
            r.fid = j.at("fid").get<double>();
            r.wd = j.at("wd").get<double>();
            r.ssim_mean = j.at("ssim_mean").get<double>();
            r.ssim_stderr = j.at("ssim_stderr").get<double>();
            r.n_pairs = j.at("n_pairs").get<std::size_t>();
            r.extractor_name = j.at("extractor_name").get<std::string>();
            r.config_hash = j.at("config_hash").get<std::string>();
            report.rows.push_back(std::move(r));
        }
        for (const auto& [hash, config] : doc.at("configs").items()) report.configs[hash] = config;
        return report;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
}

void save_report(const std::filesystem::path& path, const EvaluationReport& report) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path.string());
    out << report_to_json(report).dump(2) << '\n';
}

EvaluationReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open report: " + path.string());
    try {
        return report_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw DataError("report " + path.string() + " is not valid JSON: " + e.what());
    }
}

namespace {

constexpr std::array<Split, 3> kSplitOrder{Split::Train, Split::Val, Split::Test};

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string split_title(Split s) {
    switch (s) {
    case Split::Train: return "Train";
    case Split::Val: return "Validation";
    case Split::Test: return "Test";
    }
    return "";
}

// Averaged validation FID, else the mean of whatever direction rows exist for
// the first split that has any.
double ordering_fid(const EvaluationReport& report, const std::string& method) {
    for (Split s : {Split::Val, Split::Test, Split::Train}) {
        if (const ReportRow* r = find_row(report.rows, method, s, Direction::Averaged)) return r->fid;
        double total = 0.0;
        int n = 0;
        for (Direction d : {Direction::HeToMt, Direction::MtToHe}) {
            if (const ReportRow* r = find_row(report.rows, method, s, d)) {
                total += r->fid;
                ++n;
            }
        }
        if (n) return total / n;
    }
    return std::numeric_limits<double>::infinity();
}

std::vector<std::string> ordered_methods(const EvaluationReport& report) {
    std::vector<std::string> methods;
    for (const auto& r : report.rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
    std::stable_sort(methods.begin(), methods.end(), [&](const std::string& a, const std::string& b) {
        const double fa = ordering_fid(report, a), fb = ordering_fid(report, b);
        return fa != fb ? fa < fb : a < b;
    });
    return methods;
}

// Averaged row, or the only direction row when the other one is missing.
const ReportRow* summary_row(const EvaluationReport& report, const std::string& method, Split s, bool& partial) {
    if (const ReportRow* r = find_row(report.rows, method, s, Direction::Averaged)) return r;
    const ReportRow* a = find_row(report.rows, method, s, Direction::HeToMt);
    const ReportRow* b = find_row(report.rows, method, s, Direction::MtToHe);
    if (a || b) partial = true;
    return a ? a : b;
}

const ReportRow* rendered_row(const EvaluationReport& report, const std::string& method, Split s, Direction d,
                              bool& partial) {
    return d == Direction::Averaged ? summary_row(report, method, s, partial) : find_row(report.rows, method, s, d);
}

std::vector<Direction> rendered_directions(const RenderOptions& options) {
    if (options.per_direction) return {Direction::HeToMt, Direction::MtToHe};
    return {Direction::Averaged};
}

std::vector<Split> present_splits(const EvaluationReport& report, const RenderOptions& options) {
    const auto dirs = rendered_directions(options);
    std::vector<Split> out;
    for (Split s : kSplitOrder) {
        const bool any = std::any_of(report.rows.begin(), report.rows.end(), [&](const ReportRow& r) {
            return r.split == s && (!options.per_direction || std::find(dirs.begin(), dirs.end(), r.direction) != dirs.end());
        });
        if (any) out.push_back(s);
    }
    return out;
}

} // namespace

std::string render_csv(const EvaluationReport& report, const RenderOptions& options) {
    report.check_averages();
    std::string out = "method,direction,split,fid,wd,wd_e4,ssim_mean,ssim_stderr,n_pairs,extractor,config_hash\n";
    for (const auto& method : ordered_methods(report)) {
        for (Direction d : rendered_directions(options)) {
            for (Split s : kSplitOrder) {
                bool partial = false;
                const ReportRow* r = rendered_row(report, method, s, d, partial);
                if (!r) continue;
                out += r->method + "," + to_string(r->direction) + "," + to_string(s) + "," + exact(r->fid) + "," +
                       exact(r->wd) + "," + exact(r->wd * 1e4) + "," + exact(r->ssim_mean) + "," +
                       exact(r->ssim_stderr) + "," + std::to_string(r->n_pairs) + "," + r->extractor_name +
                       "," + r->config_hash + "\n";
            }
        }
    }
    return out;
}

std::string render_markdown(const EvaluationReport& report, const RenderOptions& options) {
    report.check_averages();
    const auto splits = present_splits(report, options);
    const auto dirs = rendered_directions(options);

    std::string header = "| Model |";
    std::string rule = "|:--|";
    if (options.per_direction) {
        header += " Direction |";
        rule += ":--|";
    }
    for (Split s : splits) {
        const std::string t = split_title(s);
        header += " " + t + " FID ↓ | " + t + " WD (×10⁻⁴) ↓ | " + t + " SSIM ↑ |";
        rule += "--:|--:|--:|";
    }
    std::string out = header + "\n" + rule + "\n";
    bool any_partial = false;

    for (const auto& method : ordered_methods(report)) {
        for (Direction d : dirs) {
            std::string cells;
            bool any = false;
            bool partial = false;
            for (Split s : splits) {
                const ReportRow* r = rendered_row(report, method, s, d, partial);
                if (!r) {
                    cells += " n/a | n/a | n/a |";
                    continue;
                }
                any = true;
                cells += " " + fixed(r->fid, options.decimals) + " | " + fixed(r->wd * 1e4, options.decimals) +
                        " | " + fixed(r->ssim_mean, 3) + " ± " + fixed(r->ssim_stderr, 3) + " |";
            }
            if (!any) continue;
            any_partial = any_partial || partial;
            std::string line = "| " + method + (partial ? "*" : "") + " |";
            if (options.per_direction) line += std::string(" ") + to_string(d) + " |";
            out += line + cells + "\n";
        }
    }
    out += "\nMethods ordered by validation FID. WD has a factor 10⁻⁴.\n";
    if (any_partial) out += "* only one translation direction evaluated; its values are shown unaveraged.\n";
    return out;
}

} // namespace stainbench
