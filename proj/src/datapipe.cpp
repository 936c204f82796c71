#include "stainbench/datapipe.hpp"

#include "stainbench/color.hpp"
#include "stainbench/error.hpp"
#include "stainbench/hash.hpp"
#include "stainbench/image_io.hpp"
#include "stainbench/numeric.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>

namespace stainbench {

namespace {

const std::array<double, 256>& od_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = std::max(0.0, -std::log10((i + 1.0) / 256.0));
        return t;
    }();
    return table;
}

} // namespace

double tissue_fraction(const ImageTile& tile, double od_threshold) {
    const auto& od = od_table();
    const auto px = tile.pixels();
    std::size_t tissue = 0;
    for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
        const double mean = (od[px[3 * i]] + od[px[3 * i + 1]] + od[px[3 * i + 2]]) / 3.0;
        if (mean > od_threshold) ++tissue;
    }
    return tile.pixel_count() ? static_cast<double>(tissue) / static_cast<double>(tile.pixel_count()) : 0.0;
}

std::size_t tile_grid_count(int width, int height, int tile_size, int stride) {
    if (width < tile_size || height < tile_size) return 0;
    const auto cols = static_cast<std::size_t>((width - tile_size) / stride + 1);
    const auto rows = static_cast<std::size_t>((height - tile_size) / stride + 1);
    return cols * rows;
}

std::vector<ImageTile> extract_tiles(const ImageTile& image, const TileExtractionParams& params) {
    if (params.tile_size <= 0 || params.stride <= 0) throw UsageError("tile size and stride must be positive");
    const ImageTile source = params.subsample2
                                 ? resize_bicubic(image, std::max(1, image.width() / 2), std::max(1, image.height() / 2))
                                 : image;
    if (source.width() < params.tile_size || source.height() < params.tile_size) {
        throw DataError("image '" + image.id() + "' (" + std::to_string(source.width()) + "x" +
                        std::to_string(source.height()) + ") is smaller than the tile size " +
                        std::to_string(params.tile_size));
    }
    const int cols = (source.width() - params.tile_size) / params.stride + 1;
    const int rows = (source.height() - params.tile_size) / params.stride + 1;
    const int cells = cols * rows;
    std::vector<std::optional<ImageTile>> kept(static_cast<std::size_t>(cells));
#pragma omp parallel for schedule(static)
    for (int cell = 0; cell < cells; ++cell) {
        const int x = (cell % cols) * params.stride;
        const int y = (cell / cols) * params.stride;
        ImageTile t = source.crop(x, y, params.tile_size, params.tile_size);
        if (tissue_fraction(t, params.od_threshold) >= params.min_tissue_fraction) {
            t.set_id(image.id() + "_x" + std::to_string(x) + "_y" + std::to_string(y));
            t.set_label(image.label());
            kept[cell] = std::move(t);
        }
    }
    std::vector<ImageTile> out;
    for (auto& t : kept) {
        if (t) out.push_back(std::move(*t));
    }
    return out;
}

const char* to_string(Split split) noexcept {
    switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Val;
    if (text == "test") return Split::Test;
    throw UsageError("unknown split '" + text + "' (expected train, val or test)");
}

Manifest::Manifest(std::vector<ManifestRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {}

namespace {

nlohmann::json record_json(const ManifestRecord& r) {
    nlohmann::json j{{"id", r.id},
                     {"source_image_id", r.source_image_id},
                     {"split", to_string(r.split)},
                     {"stain_label", r.stain_label},
                     {"tile_path", r.tile_path}};
    if (r.flag) j["flag"] = *r.flag;
    return j;
}

} // namespace

std::string record_to_json_line(const ManifestRecord& record) {
    return record_json(record).dump();
}

ManifestRecord record_from_json_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ManifestRecord r;
        r.tile_path = j.at("tile_path").get<std::string>();
        r.id = j.at("id").get<std::string>();
        r.stain_label = j.value("stain_label", std::string());
        r.split = parse_split(j.value("split", std::string("train")));
        r.source_image_id = j.value("source_image_id", std::string());
        if (j.contains("flag")) r.flag = j.at("flag").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest record: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed manifest record: ") + e.what());
    }
}

std::string Manifest::hash() const {
    std::vector<const ManifestRecord*> ordered;
    for (const auto& r : records_) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ManifestRecord* a, const ManifestRecord* b) { return a->id < b->id; });
    std::string canonical;
    for (const auto* r : ordered) {
        canonical += record_to_json_line(*r);
        canonical += '\n';
    }
    return sha256_hex(canonical);
}

void Manifest::validate() const {
    std::set<std::string> ids;
    std::vector<std::string> duplicates;
    for (const auto& r : records_) {
        if (r.id.empty()) throw DataError("manifest record with empty id: " + r.tile_path);
        if (!ids.insert(r.id).second) duplicates.push_back(r.id);
    }
    if (!duplicates.empty()) {
        std::string message = "duplicate tile ids in manifest:";
        for (std::size_t i = 0; i < duplicates.size() && i < 10; ++i) message += " " + duplicates[i];
        throw DataError(message);
    }

    std::set<std::string> test_sources, fit_sources;
    for (const auto& r : records_) {
        if (r.source_image_id.empty()) continue;
        (r.split == Split::Test ? test_sources : fit_sources).insert(r.source_image_id);
    }
    std::vector<std::string> leaked;
    std::set_intersection(test_sources.begin(), test_sources.end(), fit_sources.begin(), fit_sources.end(),
                          std::back_inserter(leaked));
    if (!leaked.empty()) {
        std::string message = "split leakage: source images shared by test and train/val:";
        for (std::size_t i = 0; i < leaked.size() && i < 10; ++i) message += " " + leaked[i];
        throw DataError(message);
    }
}

void Manifest::check_paths() const {
    std::vector<std::string> missing;
    for (const auto& r : records_) {
        if (!std::filesystem::exists(resolve(r))) missing.push_back(resolve(r).string());
    }
    if (!missing.empty()) {
        std::string message = std::to_string(missing.size()) + " manifest tile(s) missing:";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) message += " " + missing[i];
        throw DataError(message);
    }
}

std::filesystem::path Manifest::resolve(const ManifestRecord& record) const {
    const std::filesystem::path p(record.tile_path);
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

Manifest Manifest::filter(Split split) const {
    std::vector<ManifestRecord> out;
    std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
                 [split](const ManifestRecord& r) { return r.split == split; });
    return Manifest(std::move(out), base_dir_);
}

Manifest Manifest::filter_label(const std::string& stain_label) const {
    const StainLabel want = StainLabel::parse(stain_label);
    std::vector<ManifestRecord> out;
    std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
                 [&](const ManifestRecord& r) { return StainLabel::parse(r.stain_label) == want; });
    return Manifest(std::move(out), base_dir_);
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    for (const auto& r : manifest.records()) out << record_to_json_line(r) << '\n';
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    std::vector<ManifestRecord> records;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            records.push_back(record_from_json_line(line));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    Manifest m(std::move(records), path.parent_path());
    m.validate();
    return m;
}

std::vector<ImageTile> load_tiles(const Manifest& manifest) {
    const auto& records = manifest.records();
    std::vector<ImageTile> tiles(records.size());
    std::vector<std::optional<std::string>> errors(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            ImageTile t = read_image(manifest.resolve(records[i]));
            t.set_id(records[i].id);
            t.set_label(StainLabel::parse(records[i].stain_label));
            tiles[i] = std::move(t);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (e) throw DataError(*e);
    }
    return tiles;
}

std::string source_id_from_tile_name(const std::string& stem) {
    static const std::regex suffix("_x[0-9]+_y[0-9]+$");
    return std::regex_replace(stem, suffix, "");
}

Manifest build_manifest(std::span<const ManifestSource> sources, const std::filesystem::path& manifest_dir) {
    std::vector<ManifestRecord> records;
    const auto base = std::filesystem::weakly_canonical(std::filesystem::absolute(manifest_dir));
    for (const auto& source : sources) {
        if (!std::filesystem::is_directory(source.dir)) {
            throw DataError("tile directory not readable: " + source.dir.string());
        }
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(source.dir)) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".tif" || ext == ".tiff") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            ManifestRecord r;
            const auto absolute = std::filesystem::weakly_canonical(std::filesystem::absolute(f));
            r.tile_path = absolute.lexically_relative(base).generic_string();
            const std::string stem = f.stem().string();
            r.id = source.id_prefix + stem;
            r.stain_label = StainLabel::parse(source.stain_label).str();
            r.split = source.split;
            r.source_image_id = source.source_image_id.empty() ? source_id_from_tile_name(stem) : source.source_image_id;
            records.push_back(std::move(r));
        }
    }
    Manifest m(std::move(records), manifest_dir);
    m.validate();
    return m;
}

BlindMixSheet blind_mix(std::span<const std::string> real_paths, std::span<const std::string> artificial_paths,
                        std::size_t n_each, std::uint64_t seed) {
    if (n_each == 0) throw UsageError("blind mix needs at least one tile per class");
    if (real_paths.size() < n_each || artificial_paths.size() < n_each) {
        throw DataError("blind mix needs " + std::to_string(n_each) + " tiles per class, got " +
                        std::to_string(real_paths.size()) + " real and " +
                        std::to_string(artificial_paths.size()) + " artificial");
    }
    Rng rng(seed);
    const auto sample = [&](std::span<const std::string> paths) {
        std::vector<std::size_t> idx(paths.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        idx.resize(n_each);
        return idx;
    };
    BlindMixSheet sheet;
    sheet.seed = seed;
    for (std::size_t i : sample(real_paths)) sheet.entries.push_back({{}, real_paths[i], false});
    for (std::size_t i : sample(artificial_paths)) sheet.entries.push_back({{}, artificial_paths[i], true});
    rng.shuffle(sheet.entries);
    const int width = static_cast<int>(std::to_string(sheet.entries.size()).size());
    for (std::size_t i = 0; i < sheet.entries.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "img%0*zu", width, i + 1);
        sheet.entries[i].display_id = buf;
    }
    return sheet;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

} // namespace

void write_blind_mix(const BlindMixSheet& sheet, const std::filesystem::path& presentation_csv,
                     const std::filesystem::path& key_csv) {
    if (std::filesystem::absolute(presentation_csv) == std::filesystem::absolute(key_csv)) {
        throw UsageError("presentation sheet and key must be different files");
    }
    auto presentation = open_output(presentation_csv);
    auto key = open_output(key_csv);
    presentation << "display_id,tile_path\n";
    key << "display_id,truth\n";
    for (const auto& e : sheet.entries) {
        presentation << csv_field(e.display_id) << ',' << csv_field(e.tile_path) << '\n';
        key << csv_field(e.display_id) << ',' << (e.artificial ? "artificial" : "real") << '\n';
    }
}

BlindMixKey read_blind_mix_answers(const std::filesystem::path& csv) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw DataError("cannot open " + csv.string());
    BlindMixKey out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (header) {
            header = false;
            continue;
        }
        const auto fields = parse_csv_line(line);
        if (fields.size() < 2) throw DataError("expected display_id,answer in " + csv.string() + ": " + line);
        std::string answer = fields[1];
        std::transform(answer.begin(), answer.end(), answer.begin(), [](unsigned char c) { return std::tolower(c); });
        if (answer != "real" && answer != "artificial") {
            throw DataError("answer must be real or artificial, got '" + fields[1] + "'");
        }
        out[fields[0]] = answer;
    }
    return out;
}

double score_blind_mix(const BlindMixKey& key, const BlindMixKey& answers) {
    if (key.empty()) throw DataError("empty blind-mix key");
    std::size_t correct = 0;
    for (const auto& [id, truth] : key) {
        const auto it = answers.find(id);
        if (it != answers.end() && it->second == truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(key.size());
}

} // namespace stainbench
