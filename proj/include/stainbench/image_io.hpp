#pragma once

#include "stainbench/image.hpp"

#include <filesystem>

namespace stainbench {

// Reads an 8-bit PNG or TIFF as RGB. An alpha channel is dropped with a warning
// on stderr; single-channel images are replicated to three channels.
ImageTile read_image(const std::filesystem::path& path);

// Writes an 8-bit RGB image; the format follows the file extension.
void write_image(const std::filesystem::path& path, const ImageTile& tile);

} // namespace stainbench
