#include "stainbench/metrics.hpp"

#include "stainbench/color.hpp"
#include "stainbench/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace stainbench {

namespace {

struct WindowSums {
    std::int64_t x = 0, y = 0, xx = 0, yy = 0, xy = 0;
};

struct SsimConstants {
    double c1;
    double c2;
    double n;
};

double window_index(const WindowSums& s, const SsimConstants& k) {
    const double n = k.n;
    const double mx = static_cast<double>(s.x) / n;
    const double my = static_cast<double>(s.y) / n;
    const double norm = n * (n - 1.0);
    // Integer moments are exact, so equal inputs produce bit-identical terms.
    const double vx = static_cast<double>(static_cast<std::int64_t>(n) * s.xx - s.x * s.x) / norm;
    const double vy = static_cast<double>(static_cast<std::int64_t>(n) * s.yy - s.y * s.y) / norm;
    const double cxy = static_cast<double>(static_cast<std::int64_t>(n) * s.xy - s.x * s.y) / norm;
    return ((2.0 * mx * my + k.c1) * (2.0 * cxy + k.c2)) /
           ((mx * mx + my * my + k.c1) * (vx + vy + k.c2));
}

void check_ssim_inputs(const GrayImage& x, const GrayImage& y, int window) {
    if (window < 2) throw UsageError("SSIM window must be at least 2");
    if (x.width != y.width || x.height != y.height) {
        throw DataError("SSIM inputs differ in size: " + std::to_string(x.width) + "x" +
                        std::to_string(x.height) + " vs " + std::to_string(y.width) + "x" +
                        std::to_string(y.height));
    }
    if (x.width < window || x.height < window) {
        throw DataError("image smaller than the SSIM window");
    }
}

SsimConstants ssim_constants(int window, double data_range) {
    return {(0.01 * data_range) * (0.01 * data_range), (0.03 * data_range) * (0.03 * data_range),
            static_cast<double>(window) * window};
}

SsimResult finish(std::vector<double> row_sums, std::vector<double> map, int mw, int mh, int window,
                  bool keep_map) {
    SsimResult out;
    out.window_size = window;
    out.map_width = mw;
    out.map_height = mh;
    const double total = std::accumulate(row_sums.begin(), row_sums.end(), 0.0);
    out.mean_ssim = total / (static_cast<double>(mw) * mh);
    if (keep_map) out.map = std::move(map);
    return out;
}

} // namespace

SsimResult ssim(const GrayImage& x, const GrayImage& y, int window, double data_range, bool keep_map) {
    check_ssim_inputs(x, y, window);
    const SsimConstants k = ssim_constants(window, data_range);
    const int w = x.width, h = x.height;
    const int mw = w - window + 1, mh = h - window + 1;

    // Summed-area tables, (h + 1) x (w + 1), exact in 64-bit integers.
    const std::size_t stride = static_cast<std::size_t>(w) + 1;
    std::vector<WindowSums> table(stride * (static_cast<std::size_t>(h) + 1));
    for (int r = 0; r < h; ++r) {
        WindowSums run;
        for (int c = 0; c < w; ++c) {
            const std::int64_t a = x.at(c, r), b = y.at(c, r);
            run.x += a;
            run.y += b;
            run.xx += a * a;
            run.yy += b * b;
            run.xy += a * b;
            const WindowSums& up = table[static_cast<std::size_t>(r) * stride + c + 1];
            WindowSums& cell = table[static_cast<std::size_t>(r + 1) * stride + c + 1];
            cell = {up.x + run.x, up.y + run.y, up.xx + run.xx, up.yy + run.yy, up.xy + run.xy};
        }
    }

    std::vector<double> row_sums(static_cast<std::size_t>(mh), 0.0);
    std::vector<double> map(keep_map ? static_cast<std::size_t>(mw) * mh : 0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < mh; ++r) {
        double acc = 0.0;
        for (int c = 0; c < mw; ++c) {
            const auto& a = table[static_cast<std::size_t>(r) * stride + c];
            const auto& b = table[static_cast<std::size_t>(r) * stride + c + window];
            const auto& d = table[static_cast<std::size_t>(r + window) * stride + c];
            const auto& e = table[static_cast<std::size_t>(r + window) * stride + c + window];
            const WindowSums s{e.x - b.x - d.x + a.x, e.y - b.y - d.y + a.y,
                               e.xx - b.xx - d.xx + a.xx, e.yy - b.yy - d.yy + a.yy,
                               e.xy - b.xy - d.xy + a.xy};
            const double v = window_index(s, k);
            acc += v;
            if (keep_map) map[static_cast<std::size_t>(r) * mw + c] = v;
        }
        row_sums[r] = acc;
    }
    return finish(std::move(row_sums), std::move(map), mw, mh, window, keep_map);
}

MeanWithError mean_with_stderr(std::span<const double> values) {
    MeanWithError out;
    out.n = values.size();
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw DataError("empirical distribution needs at least one sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double wasserstein_1d(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    const auto u = a.values();
    const auto v = b.values();
    const double nu = static_cast<double>(u.size());
    const double nv = static_cast<double>(v.size());
    std::size_t i = 0, j = 0;
    double total = 0.0;
    double previous = std::min(u.front(), v.front());
    // Walk the merged support; between consecutive points both CDFs are flat.
    while (i < u.size() || j < v.size()) {
        const double next = (j >= v.size() || (i < u.size() && u[i] <= v[j])) ? u[i] : v[j];
        total += std::abs(static_cast<double>(i) / nu - static_cast<double>(j) / nv) * (next - previous);
        while (i < u.size() && u[i] == next) ++i;
        while (j < v.size() && v[j] == next) ++j;
        previous = next;
    }
    return total;
}

namespace {

// Square roots of eigenvalues, with values under the usual rank tolerance
// d * eps * max|lambda| treated as exact zeros.
Eigen::VectorXd clamped_roots(const Eigen::VectorXd& eigenvalues) {
    const double top = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    const double floor = static_cast<double>(eigenvalues.size()) * std::numeric_limits<double>::epsilon() * top;
    return eigenvalues.unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
}

void pool_chroma(std::span<const LabImage> images, const WdOptions& options, std::vector<double>& a,
                 std::vector<double>& b) {
    std::size_t total = 0;
    for (const auto& img : images) total += img.pixels.size();
    if (total == 0) throw DataError("colour distance needs non-empty image sets");
    const std::size_t cap = std::max<std::size_t>(options.sample_cap, 1);
    const std::size_t stride = total > cap ? (total + cap - 1) / cap : 1;
    a.reserve(total / stride + 1);
    b.reserve(total / stride + 1);
    std::size_t index = 0;
    for (const auto& img : images) {
        for (const Lab& p : img.pixels) {
            if (index++ % stride == 0) {
                a.push_back(normalize_chroma(p.a));
                b.push_back(normalize_chroma(p.b));
            }
        }
    }
}

} // namespace

double wd_color_lab(std::span<const LabImage> generated, std::span<const LabImage> target,
                    const WdOptions& options) {
    if (generated.empty() || target.empty()) throw DataError("colour distance needs non-empty image sets");
    std::vector<double> ga, gb, ta, tb;
    pool_chroma(generated, options, ga, gb);
    pool_chroma(target, options, ta, tb);
    const double wa = wasserstein_1d(EmpiricalDistribution(std::move(ga)), EmpiricalDistribution(std::move(ta)));
    const double wb = wasserstein_1d(EmpiricalDistribution(std::move(gb)), EmpiricalDistribution(std::move(tb)));
    return 0.5 * (wa + wb);
}

double wd_color(std::span<const ImageTile> generated, std::span<const ImageTile> target,
                const WdOptions& options) {
    if (generated.empty() || target.empty()) throw DataError("colour distance needs non-empty image sets");
    const auto convert = [](std::span<const ImageTile> tiles) {
        std::vector<LabImage> out(tiles.size());
        const auto n = static_cast<std::ptrdiff_t>(tiles.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = rgb_to_lab(tiles[i]);
        return out;
    };
    const auto g = convert(generated);
    const auto t = convert(target);
    return wd_color_lab(g, t, options);
}

FeatureGaussian fit_feature_gaussian(const Eigen::MatrixXd& features) {
    if (features.rows() < 2) throw DataError("a Gaussian fit needs at least two feature rows");
    FeatureGaussian g;
    g.sample_count = static_cast<std::size_t>(features.rows());
    g.mean = features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = features.rowwise() - g.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);
    g.covariance = 0.5 * (cov + cov.transpose());
    return g;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DataError("matrix square root needs a square matrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw NumericalError("matrix square root needs a symmetric matrix");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::VectorXd roots = clamped_roots(eig.eigenvalues());
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const FeatureGaussian& g1, const FeatureGaussian& g2) {
    if (g1.mean.size() != g2.mean.size() || g1.covariance.rows() != g2.covariance.rows()) {
        throw DataError("Frechet distance between Gaussians of dimension " +
                        std::to_string(g1.mean.size()) + " and " + std::to_string(g2.mean.size()));
    }
    const Eigen::MatrixXd root1 = sqrtm_psd(g1.covariance);
    Eigen::MatrixXd product = root1 * g2.covariance * root1;
    product = 0.5 * (product + product.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(product, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const double cross = clamped_roots(eig.eigenvalues()).sum();
    const double d = (g1.mean - g2.mean).squaredNorm() + g1.covariance.trace() +
                     g2.covariance.trace() - 2.0 * cross;
    return std::max(0.0, d);
}

namespace serial {

SsimResult ssim(const GrayImage& x, const GrayImage& y, int window, double data_range, bool keep_map) {
    check_ssim_inputs(x, y, window);
    const SsimConstants k = ssim_constants(window, data_range);
    const int mw = x.width - window + 1, mh = x.height - window + 1;
    std::vector<double> row_sums(static_cast<std::size_t>(mh), 0.0);
    std::vector<double> map;
    for (int r = 0; r < mh; ++r) {
        for (int c = 0; c < mw; ++c) {
            WindowSums s;
            for (int j = 0; j < window; ++j) {
                for (int i = 0; i < window; ++i) {
                    const std::int64_t a = x.at(c + i, r + j), b = y.at(c + i, r + j);
                    s.x += a;
                    s.y += b;
                    s.xx += a * a;
                    s.yy += b * b;
                    s.xy += a * b;
                }
            }
            const double v = window_index(s, k);
            row_sums[r] += v;
            if (keep_map) map.push_back(v);
        }
    }
    return finish(std::move(row_sums), std::move(map), mw, mh, window, keep_map);
}

} // namespace serial

} // namespace stainbench
