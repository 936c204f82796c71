#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stainbench {

class StainLabel {
public:
    enum class Kind { HE, MT, Other };

    StainLabel() = default;
    explicit StainLabel(Kind kind) : kind_(kind) {}

    // "HE" / "H&E" and "MT" map to the two known stains; anything else is kept verbatim.
    static StainLabel parse(std::string_view text);
    static StainLabel other(std::string name);

    Kind kind() const noexcept { return kind_; }
    std::string str() const;

    bool operator==(const StainLabel& rhs) const noexcept {
        return kind_ == rhs.kind_ && (kind_ != Kind::Other || name_ == rhs.name_);
    }

private:
    Kind kind_ = Kind::Other;
    std::string name_;
};

using Rgb = std::array<std::uint8_t, 3>;

// H x W x 3 8-bit RGB raster, row-major, interleaved channels.
class ImageTile {
public:
    ImageTile() = default;
    ImageTile(int width, int height, std::vector<std::uint8_t> pixels, std::string id = {},
              StainLabel label = {});

    static ImageTile filled(int width, int height, Rgb color, std::string id = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    Rgb at(int x, int y) const noexcept;
    void set(int x, int y, Rgb value) noexcept;

    const std::string& id() const noexcept { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }
    const StainLabel& label() const noexcept { return label_; }
    void set_label(StainLabel label) { label_ = std::move(label); }

    // Copy of the rectangle [x, x+w) x [y, y+h).
    ImageTile crop(int x, int y, int w, int h) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
    std::string id_;
    StainLabel label_;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const noexcept {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

struct Lab {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
};

struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<Lab> pixels;
};

// N x 3 optical densities, one row per pixel.
using OdMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
// N x 2 stain concentrations, one row per pixel.
using ConcentrationMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

} // namespace stainbench
