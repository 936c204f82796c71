#pragma once

#include "stainbench/image.hpp"

#include <array>
#include <vector>

namespace stainbench {

// CIELAB (D65) from sRGB. The white point is the XYZ image of sRGB (1,1,1),
// so neutral pixels land on a = b = 0.
LabImage rgb_to_lab(const ImageTile& tile);
Lab rgb_to_lab(Rgb rgb) noexcept;

// Inverse of rgb_to_lab; out-of-gamut results are clamped to [0, 255].
ImageTile lab_to_rgb(const LabImage& image);
Rgb lab_to_rgb(const Lab& lab) noexcept;

// BT.601 luma with round-half-up, computed in integer arithmetic.
GrayImage rgb_to_gray(const ImageTile& tile);
std::uint8_t rgb_to_gray(Rgb rgb) noexcept;

// OD = -log10((I + 1) / (I0 + 1)), clamped at 0. One row per pixel, no filtering.
OdMatrix rgb_to_od(const ImageTile& tile, double background_intensity = 255.0);

// I = (I0 + 1) * 10^-OD - 1, rounded and clamped. Exact inverse of rgb_to_od on 8-bit data.
ImageTile od_to_rgb(const OdMatrix& od, int width, int height, double background_intensity = 255.0);

// Lightness / chroma split of a LAB image and its inverse merge.
std::vector<double> lightness(const LabImage& image);
std::vector<std::array<double, 2>> chroma(const LabImage& image);
LabImage merge_lightness_chroma(int width, int height, const std::vector<double>& l,
                                const std::vector<std::array<double, 2>>& ab);

// Separable bicubic resampling (Keys, a = -0.5) with the kernel widened by the
// scale factor when downsampling, so it low-passes like an antialiasing filter.
ImageTile resize_bicubic(const ImageTile& tile, int out_width, int out_height);

namespace serial {

// Single-threaded reference kernels, kept for cross-checking the OpenMP paths.
LabImage rgb_to_lab(const ImageTile& tile);
ImageTile lab_to_rgb(const LabImage& image);
OdMatrix rgb_to_od(const ImageTile& tile, double background_intensity = 255.0);
ImageTile od_to_rgb(const OdMatrix& od, int width, int height, double background_intensity = 255.0);

} // namespace serial

} // namespace stainbench
