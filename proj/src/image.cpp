#include "stainbench/image.hpp"

#include "stainbench/error.hpp"

#include <algorithm>
#include <cctype>

namespace stainbench {

StainLabel StainLabel::parse(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "HE" || upper == "H&E") return StainLabel(Kind::HE);
    if (upper == "MT") return StainLabel(Kind::MT);
    return other(std::string(text));
}

StainLabel StainLabel::other(std::string name) {
    StainLabel label(Kind::Other);
    label.name_ = std::move(name);
    return label;
}

std::string StainLabel::str() const {
    switch (kind_) {
    case Kind::HE: return "HE";
    case Kind::MT: return "MT";
    case Kind::Other: return name_;
    }
    return name_;
}

ImageTile::ImageTile(int width, int height, std::vector<std::uint8_t> pixels, std::string id,
                     StainLabel label)
    : width_(width), height_(height), pixels_(std::move(pixels)), id_(std::move(id)),
      label_(std::move(label)) {
    if (width <= 0 || height <= 0) {
        throw DataError("tile dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
    if (pixels_.size() != pixel_count() * 3) {
        throw DataError("tile buffer holds " + std::to_string(pixels_.size()) +
                        " bytes, expected " + std::to_string(pixel_count() * 3));
    }
}

ImageTile ImageTile::filled(int width, int height, Rgb color, std::string id) {
    std::vector<std::uint8_t> buffer(static_cast<std::size_t>(std::max(width, 0)) *
                                     static_cast<std::size_t>(std::max(height, 0)) * 3);
    for (std::size_t i = 0; i < buffer.size(); i += 3) {
        buffer[i] = color[0];
        buffer[i + 1] = color[1];
        buffer[i + 2] = color[2];
    }
    return ImageTile(width, height, std::move(buffer), std::move(id));
}

Rgb ImageTile::at(int x, int y) const noexcept {
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
}

void ImageTile::set(int x, int y, Rgb value) noexcept {
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[o] = value[0];
    pixels_[o + 1] = value[1];
    pixels_[o + 2] = value[2];
}

ImageTile ImageTile::crop(int x, int y, int w, int h) const {
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > width_ || y + h > height_) {
        throw DataError("crop rectangle outside the image");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * 3);
    for (int row = 0; row < h; ++row) {
        const auto* src = pixels_.data() + (static_cast<std::size_t>(y + row) * width_ + x) * 3;
        std::copy(src, src + static_cast<std::size_t>(w) * 3,
                  out.begin() + static_cast<std::ptrdiff_t>(row) * w * 3);
    }
    return ImageTile(w, h, std::move(out), {}, label_);
}

} // namespace stainbench
