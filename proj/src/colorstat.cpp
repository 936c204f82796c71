#include "stainbench/color.hpp"
#include "stainbench/stain.hpp"

#include <cmath>

namespace stainbench {

namespace {

double channel(const Lab& p, int c) {
    return c == 0 ? p.l : (c == 1 ? p.a : p.b);
}

double& channel(Lab& p, int c) {
    return c == 0 ? p.l : (c == 1 ? p.a : p.b);
}

// Two-pass moments with per-row partial sums, reduced in row order so the
// result does not depend on the thread count.
ColorStatProfile lab_moments(const LabImage& lab) {
    const int h = lab.height;
    const int w = lab.width;
    std::vector<std::array<double, 3>> row_sums(h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::array<double, 3> s{};
        for (int x = 0; x < w; ++x) {
            const Lab& p = lab.pixels[static_cast<std::size_t>(y) * w + x];
            for (int c = 0; c < 3; ++c) s[c] += channel(p, c);
        }
        row_sums[y] = s;
    }
    ColorStatProfile out;
    const double n = static_cast<double>(lab.pixels.size());
    for (const auto& s : row_sums) {
        for (int c = 0; c < 3; ++c) out.mean[c] += s[c];
    }
    for (int c = 0; c < 3; ++c) out.mean[c] /= n;

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::array<double, 3> s{};
        for (int x = 0; x < w; ++x) {
            const Lab& p = lab.pixels[static_cast<std::size_t>(y) * w + x];
            for (int c = 0; c < 3; ++c) {
                const double d = channel(p, c) - out.mean[c];
                s[c] += d * d;
            }
        }
        row_sums[y] = s;
    }
    std::array<double, 3> ss{};
    for (const auto& s : row_sums) {
        for (int c = 0; c < 3; ++c) ss[c] += s[c];
    }
    for (int c = 0; c < 3; ++c) out.std[c] = std::sqrt(ss[c] / n);
    out.fit.corpus_size = 1;
    return out;
}

} // namespace

ColorStatProfile stats_lab(const ImageTile& tile) {
    ColorStatProfile out = lab_moments(rgb_to_lab(tile));
    out.fit.stain_label = tile.label().str();
    return out;
}

ColorStatProfile fit_colorstat(std::span<const ImageTile> corpus) {
    if (corpus.empty()) throw CorpusFitError("cannot fit ColorStat on an empty corpus", {});
    std::vector<ColorStatProfile> per_tile(corpus.size());
    const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) per_tile[i] = stats_lab(corpus[i]);

    ColorStatProfile out;
    for (const auto& p : per_tile) {
        for (int c = 0; c < 3; ++c) {
            out.mean[c] += p.mean[c];
            out.std[c] += p.std[c];
        }
    }
    for (int c = 0; c < 3; ++c) {
        out.mean[c] /= static_cast<double>(corpus.size());
        out.std[c] /= static_cast<double>(corpus.size());
    }
    out.fit.corpus_size = corpus.size();
    out.fit.skipped = 0;
    out.fit.stain_label = corpus.front().label().str();
    return out;
}

ImageTile apply_colorstat(const ImageTile& tile, const ColorStatProfile& target) {
    LabImage lab = rgb_to_lab(tile);
    const ColorStatProfile source = lab_moments(lab);
    std::array<double, 3> scale{};
    for (int c = 0; c < 3; ++c) {
        scale[c] = source.std[c] > kColorStatSigmaFloor ? target.std[c] / source.std[c] : 0.0;
    }
    const auto n = static_cast<std::ptrdiff_t>(lab.pixels.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            double& v = channel(lab.pixels[i], c);
            v = (v - source.mean[c]) * scale[c] + target.mean[c];
        }
    }
    ImageTile out = lab_to_rgb(lab);
    out.set_id(tile.id());
    out.set_label(tile.label());
    return out;
}

namespace serial {

ColorStatProfile stats_lab(const ImageTile& tile) {
    const LabImage lab = serial::rgb_to_lab(tile);
    ColorStatProfile out;
    const double n = static_cast<double>(lab.pixels.size());
    for (const Lab& p : lab.pixels) {
        for (int c = 0; c < 3; ++c) out.mean[c] += channel(p, c);
    }
    for (int c = 0; c < 3; ++c) out.mean[c] /= n;
    std::array<double, 3> ss{};
    for (const Lab& p : lab.pixels) {
        for (int c = 0; c < 3; ++c) {
            const double d = channel(p, c) - out.mean[c];
            ss[c] += d * d;
        }
    }
    for (int c = 0; c < 3; ++c) out.std[c] = std::sqrt(ss[c] / n);
    out.fit.corpus_size = 1;
    out.fit.stain_label = tile.label().str();
    return out;
}

} // namespace serial

} // namespace stainbench
