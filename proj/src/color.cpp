#include "stainbench/color.hpp"

#include "stainbench/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>

namespace stainbench {

namespace {

constexpr double kLabEpsilon = 216.0 / 24389.0;
constexpr double kLabKappa = 24389.0 / 27.0;
constexpr int kEncodeBuckets = 4096;

double srgb_decode(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

struct LabTables {
    Eigen::Matrix3d to_xyz;
    Eigen::Matrix3d to_rgb;
    Eigen::Vector3d white;
    std::array<double, 256> linear{};
    // Linear-light values at which the rounded 8-bit encoding steps from k - 1 to k.
    std::array<double, 255> thresholds{};
    // Encoded value at the lower edge of each linear bucket; buckets are narrower
    // than any encoding step, so at most one threshold falls inside a bucket.
    std::array<std::uint8_t, kEncodeBuckets> bucket_floor{};
};

const LabTables& lab_tables() {
    static const LabTables tables = [] {
        LabTables t;
        // IEC 61966-2-1 linear sRGB -> XYZ.
        t.to_xyz << 0.4124564, 0.3575761, 0.1804375,
                    0.2126729, 0.7151522, 0.0721750,
                    0.0193339, 0.1191920, 0.9503041;
        t.to_rgb = t.to_xyz.inverse();
        t.white = t.to_xyz * Eigen::Vector3d::Ones();
        for (int i = 0; i < 256; ++i) t.linear[i] = srgb_decode(i / 255.0);
        for (int k = 1; k <= 255; ++k) t.thresholds[k - 1] = srgb_decode((k - 0.5) / 255.0);
        for (int b = 0; b < kEncodeBuckets; ++b) {
            const double edge = static_cast<double>(b) / kEncodeBuckets;
            t.bucket_floor[b] = static_cast<std::uint8_t>(
                std::upper_bound(t.thresholds.begin(), t.thresholds.end(), edge) - t.thresholds.begin());
        }
        return t;
    }();
    return tables;
}

// Cube root for positive finite x: exponent-thirding seed (a few percent off)
// refined by three Halley steps, each cubing the relative error.
double cube_root(double x) {
    double y = std::bit_cast<double>(std::bit_cast<std::uint64_t>(x) / 3 + 0x2a9f7893782da1ceULL);
    for (int k = 0; k < 3; ++k) {
        const double y3 = y * y * y;
        y *= (y3 + 2.0 * x) / (2.0 * y3 + x);
    }
    return y;
}

double lab_f(double t) {
    return t > kLabEpsilon ? cube_root(t) : (kLabKappa * t + 16.0) / 116.0;
}

double lab_f_inverse(double f) {
    const double f3 = f * f * f;
    return f3 > kLabEpsilon ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

// Same result as counting thresholds <= linear.
std::uint8_t encode_byte(double linear, const LabTables& t) {
    if (!(linear > 0.0)) return 0;
    if (linear >= 1.0) return 255;
    int k = t.bucket_floor[static_cast<int>(linear * kEncodeBuckets)];
    while (k < 255 && linear >= t.thresholds[k]) ++k;
    return static_cast<std::uint8_t>(k);
}

Lab lab_from_rgb(Rgb rgb, const LabTables& t) {
    const double r = t.linear[rgb[0]];
    const double g = t.linear[rgb[1]];
    const double b = t.linear[rgb[2]];
    const auto& m = t.to_xyz;
    const double fx = lab_f((m(0, 0) * r + m(0, 1) * g + m(0, 2) * b) / t.white[0]);
    const double fy = lab_f((m(1, 0) * r + m(1, 1) * g + m(1, 2) * b) / t.white[1]);
    const double fz = lab_f((m(2, 0) * r + m(2, 1) * g + m(2, 2) * b) / t.white[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb rgb_from_lab(const Lab& lab, const LabTables& t) {
    const double fy = (lab.l + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const double x = t.white[0] * lab_f_inverse(fx);
    const double y = t.white[1] * lab_f_inverse(fy);
    const double z = t.white[2] * lab_f_inverse(fz);
    const auto& m = t.to_rgb;
    return {encode_byte(m(0, 0) * x + m(0, 1) * y + m(0, 2) * z, t),
            encode_byte(m(1, 0) * x + m(1, 1) * y + m(1, 2) * z, t),
            encode_byte(m(2, 0) * x + m(2, 1) * y + m(2, 2) * z, t)};
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::array<double, 256> od_table(double background) {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
        t[i] = std::max(0.0, -std::log10((i + 1.0) / (background + 1.0)));
    }
    return t;
}

void check_background(double background) {
    if (!(background > 0.0)) throw UsageError("background intensity must be positive");
}

void check_od_shape(const OdMatrix& od, int width, int height) {
    if (width <= 0 || height <= 0 ||
        od.rows() != static_cast<Eigen::Index>(width) * static_cast<Eigen::Index>(height)) {
        throw DataError("OD matrix has " + std::to_string(od.rows()) + " rows, expected " +
                        std::to_string(static_cast<long long>(width) * height));
    }
}

std::uint8_t od_to_byte(double od, double background) {
    return to_byte((background + 1.0) * std::pow(10.0, -od) - 1.0);
}

} // namespace

Lab rgb_to_lab(Rgb rgb) noexcept {
    return lab_from_rgb(rgb, lab_tables());
}

Rgb lab_to_rgb(const Lab& lab) noexcept {
    return rgb_from_lab(lab, lab_tables());
}

std::uint8_t rgb_to_gray(Rgb rgb) noexcept {
    const int weighted = 299 * rgb[0] + 587 * rgb[1] + 114 * rgb[2];
    return static_cast<std::uint8_t>((weighted + 500) / 1000);
}

LabImage rgb_to_lab(const ImageTile& tile) {
    LabImage out{tile.width(), tile.height(), std::vector<Lab>(tile.pixel_count())};
    const auto px = tile.pixels();
    const auto n = static_cast<std::ptrdiff_t>(tile.pixel_count());
    const LabTables& t = lab_tables();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out.pixels[i] = lab_from_rgb(Rgb{px[3 * i], px[3 * i + 1], px[3 * i + 2]}, t);
    }
    return out;
}

ImageTile lab_to_rgb(const LabImage& image) {
    const auto n = static_cast<std::ptrdiff_t>(image.pixels.size());
    std::vector<std::uint8_t> buffer(image.pixels.size() * 3);
    const LabTables& t = lab_tables();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Rgb rgb = rgb_from_lab(image.pixels[i], t);
        buffer[3 * i] = rgb[0];
        buffer[3 * i + 1] = rgb[1];
        buffer[3 * i + 2] = rgb[2];
    }
    return ImageTile(image.width, image.height, std::move(buffer));
}

GrayImage rgb_to_gray(const ImageTile& tile) {
    GrayImage out{tile.width(), tile.height(), std::vector<std::uint8_t>(tile.pixel_count())};
    const auto px = tile.pixels();
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = rgb_to_gray(Rgb{px[3 * i], px[3 * i + 1], px[3 * i + 2]});
    }
    return out;
}

OdMatrix rgb_to_od(const ImageTile& tile, double background_intensity) {
    check_background(background_intensity);
    const auto table = od_table(background_intensity);
    const auto px = tile.pixels();
    const auto n = static_cast<std::ptrdiff_t>(tile.pixel_count());
    OdMatrix od(n, 3);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        od(i, 0) = table[px[3 * i]];
        od(i, 1) = table[px[3 * i + 1]];
        od(i, 2) = table[px[3 * i + 2]];
    }
    return od;
}

ImageTile od_to_rgb(const OdMatrix& od, int width, int height, double background_intensity) {
    check_background(background_intensity);
    check_od_shape(od, width, height);
    const auto n = static_cast<std::ptrdiff_t>(od.rows());
    std::vector<std::uint8_t> buffer(static_cast<std::size_t>(n) * 3);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) buffer[3 * i + c] = od_to_byte(od(i, c), background_intensity);
    }
    return ImageTile(width, height, std::move(buffer));
}

std::vector<double> lightness(const LabImage& image) {
    std::vector<double> out(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), out.begin(),
                   [](const Lab& p) { return p.l; });
    return out;
}

std::vector<std::array<double, 2>> chroma(const LabImage& image) {
    std::vector<std::array<double, 2>> out(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), out.begin(),
                   [](const Lab& p) { return std::array<double, 2>{p.a, p.b}; });
    return out;
}

LabImage merge_lightness_chroma(int width, int height, const std::vector<double>& l,
                                const std::vector<std::array<double, 2>>& ab) {
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (width <= 0 || height <= 0 || l.size() != n || ab.size() != n) {
        throw DataError("lightness/chroma planes do not match the image size");
    }
    LabImage out{width, height, std::vector<Lab>(n)};
    for (std::size_t i = 0; i < n; ++i) out.pixels[i] = {l[i], ab[i][0], ab[i][1]};
    return out;
}

namespace {

double keys_cubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

struct ResampleWeights {
    std::vector<int> first;
    std::vector<std::vector<double>> weights;
};

ResampleWeights resample_weights(int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double filter_scale = std::max(scale, 1.0);
    const double support = 2.0 * filter_scale;
    ResampleWeights rw;
    rw.first.resize(out_size);
    rw.weights.resize(out_size);
    for (int i = 0; i < out_size; ++i) {
        const double center = (i + 0.5) * scale;
        const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
        const int hi = std::min(in_size, static_cast<int>(std::ceil(center + support)));
        std::vector<double> w;
        double total = 0.0;
        for (int j = lo; j < hi; ++j) {
            const double v = keys_cubic((j + 0.5 - center) / filter_scale);
            w.push_back(v);
            total += v;
        }
        if (total != 0.0) {
            for (double& v : w) v /= total;
        }
        rw.first[i] = lo;
        rw.weights[i] = std::move(w);
    }
    return rw;
}

} // namespace

ImageTile resize_bicubic(const ImageTile& tile, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0) throw UsageError("resize target must be positive");
    if (out_width == tile.width() && out_height == tile.height()) {
        ImageTile copy = tile;
        return copy;
    }
    const auto horizontal = resample_weights(tile.width(), out_width);
    const auto vertical = resample_weights(tile.height(), out_height);
    const auto px = tile.pixels();

    std::vector<double> rows(static_cast<std::size_t>(tile.height()) * out_width * 3);
    for (int y = 0; y < tile.height(); ++y) {
        for (int x = 0; x < out_width; ++x) {
            const auto& w = horizontal.weights[x];
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    const std::size_t src =
                        (static_cast<std::size_t>(y) * tile.width() + horizontal.first[x] + k) * 3 + c;
                    acc += w[k] * px[src];
                }
                rows[(static_cast<std::size_t>(y) * out_width + x) * 3 + c] = acc;
            }
        }
    }

    std::vector<std::uint8_t> out(static_cast<std::size_t>(out_width) * out_height * 3);
    for (int y = 0; y < out_height; ++y) {
        const auto& w = vertical.weights[y];
        for (int x = 0; x < out_width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    acc += w[k] * rows[((vertical.first[y] + k) * out_width + x) * 3 + c];
                }
                out[(static_cast<std::size_t>(y) * out_width + x) * 3 + c] = to_byte(acc);
            }
        }
    }
    return ImageTile(out_width, out_height, std::move(out), tile.id(), tile.label());
}

namespace serial {

LabImage rgb_to_lab(const ImageTile& tile) {
    LabImage out{tile.width(), tile.height(), {}};
    out.pixels.reserve(tile.pixel_count());
    for (int y = 0; y < tile.height(); ++y) {
        for (int x = 0; x < tile.width(); ++x) out.pixels.push_back(stainbench::rgb_to_lab(tile.at(x, y)));
    }
    return out;
}

ImageTile lab_to_rgb(const LabImage& image) {
    ImageTile out = ImageTile::filled(image.width, image.height, {0, 0, 0});
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            out.set(x, y, stainbench::lab_to_rgb(image.pixels[static_cast<std::size_t>(y) * image.width + x]));
        }
    }
    return out;
}

OdMatrix rgb_to_od(const ImageTile& tile, double background_intensity) {
    check_background(background_intensity);
    OdMatrix od(static_cast<Eigen::Index>(tile.pixel_count()), 3);
    Eigen::Index row = 0;
    for (int y = 0; y < tile.height(); ++y) {
        for (int x = 0; x < tile.width(); ++x, ++row) {
            const Rgb p = tile.at(x, y);
            for (int c = 0; c < 3; ++c) {
                od(row, c) = std::max(0.0, -std::log10((p[c] + 1.0) / (background_intensity + 1.0)));
            }
        }
    }
    return od;
}

ImageTile od_to_rgb(const OdMatrix& od, int width, int height, double background_intensity) {
    check_background(background_intensity);
    check_od_shape(od, width, height);
    ImageTile out = ImageTile::filled(width, height, {0, 0, 0});
    Eigen::Index row = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x, ++row) {
            out.set(x, y, Rgb{od_to_byte(od(row, 0), background_intensity),
                              od_to_byte(od(row, 1), background_intensity),
                              od_to_byte(od(row, 2), background_intensity)});
        }
    }
    return out;
}

} // namespace serial

} // namespace stainbench
