#pragma once

#include "stainbench/image.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stainbench {

// ---------------------------------------------------------------------------
// Tiling
// ---------------------------------------------------------------------------

// Fraction of pixels whose mean-channel OD exceeds od_threshold.
double tissue_fraction(const ImageTile& tile, double od_threshold = 0.15);

struct TileExtractionParams {
    int tile_size = 256;
    int stride = 256;
    double min_tissue_fraction = 0.5;
    double od_threshold = 0.15;
    // Bicubic 1:2 downscale of the whole raster before tiling.
    bool subsample2 = false;
};

// Row-major grid of tiles kept if their tissue fraction reaches the minimum.
// Tile ids are "<image id>_x<X>_y<Y>" with pixel offsets in the (possibly
// subsampled) raster.
std::vector<ImageTile> extract_tiles(const ImageTile& image, const TileExtractionParams& params = {});

// Number of grid cells before filtering.
std::size_t tile_grid_count(int width, int height, int tile_size, int stride);

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

enum class Split { Train, Val, Test };

const char* to_string(Split split) noexcept;
Split parse_split(const std::string& text);

struct ManifestRecord {
    // Relative paths are resolved against the manifest's directory.
    std::string tile_path;
    std::string id;
    std::string stain_label;
    Split split = Split::Train;
    std::string source_image_id;
    // Free-form per-tile annotation, e.g. a transfer passthrough.
    std::optional<std::string> flag;
};

class Manifest {
public:
    Manifest() = default;
    explicit Manifest(std::vector<ManifestRecord> records, std::filesystem::path base_dir = {});

    const std::vector<ManifestRecord>& records() const noexcept { return records_; }
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    // SHA-256 over the canonical JSON of every record, ordered by id.
    std::string hash() const;

    // Unique ids and no source image shared between test and train/val.
    void validate() const;
    // Throws DataError naming the first tiles whose files are missing.
    void check_paths() const;

    std::filesystem::path resolve(const ManifestRecord& record) const;

    Manifest filter(Split split) const;
    Manifest filter_label(const std::string& stain_label) const;

private:
    std::vector<ManifestRecord> records_;
    std::filesystem::path base_dir_;
};

std::string record_to_json_line(const ManifestRecord& record);
ManifestRecord record_from_json_line(const std::string& line);

void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

// Reads every tile in manifest order; ids and labels come from the records.
std::vector<ImageTile> load_tiles(const Manifest& manifest);

struct ManifestSource {
    std::filesystem::path dir;
    std::string stain_label;
    Split split = Split::Train;
    // Empty: derived from each file name by stripping a trailing _x<X>_y<Y>.
    std::string source_image_id;
    std::string id_prefix;
};

// Image files (png, tif, tiff) of every source, sorted by file name within a
// source; paths are written relative to manifest_dir.
Manifest build_manifest(std::span<const ManifestSource> sources, const std::filesystem::path& manifest_dir);

std::string source_id_from_tile_name(const std::string& stem);

// ---------------------------------------------------------------------------
// Blind-mix sheets
// ---------------------------------------------------------------------------

struct BlindMixEntry {
    std::string display_id;
    std::string tile_path;
    bool artificial = false;
};

struct BlindMixSheet {
    std::vector<BlindMixEntry> entries;
    std::uint64_t seed = 0;
};

BlindMixSheet blind_mix(std::span<const std::string> real_paths, std::span<const std::string> artificial_paths,
                        std::size_t n_each = 200, std::uint64_t seed = 0);

// Presentation CSV (display_id,tile_path) and key CSV (display_id,truth).
void write_blind_mix(const BlindMixSheet& sheet, const std::filesystem::path& presentation_csv,
                     const std::filesystem::path& key_csv);

using BlindMixKey = std::map<std::string, std::string>;

// display_id -> "real" | "artificial" from a two-column CSV with header.
BlindMixKey read_blind_mix_answers(const std::filesystem::path& csv);

// Fraction of key entries answered correctly; unanswered entries count as wrong.
double score_blind_mix(const BlindMixKey& key, const BlindMixKey& answers);

} // namespace stainbench
