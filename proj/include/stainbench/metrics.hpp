#pragma once

#include "stainbench/image.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace stainbench {

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

struct SsimResult {
    double mean_ssim = 0.0;
    int window_size = 7;
    // Per-window indices, row-major over window origins; filled on request.
    int map_width = 0;
    int map_height = 0;
    std::vector<double> map;
};

// Mean SSIM over all fully interior windows with uniform weights and sample
// (n - 1) variance/covariance; c1 = (0.01 L)^2, c2 = (0.03 L)^2.
SsimResult ssim(const GrayImage& x, const GrayImage& y, int window = 7, double data_range = 255.0,
                bool keep_map = false);

struct MeanWithError {
    double mean = 0.0;
    // Sample standard deviation / sqrt(n); zero for n < 2.
    double standard_error = 0.0;
    std::size_t n = 0;
};

MeanWithError mean_with_stderr(std::span<const double> values);

// ---------------------------------------------------------------------------
// Wasserstein-1 on colour channels
// ---------------------------------------------------------------------------

class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(std::vector<double> samples);

    std::span<const double> values() const noexcept { return sorted_; }
    std::size_t count() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

// Integral of |F_a - F_b| over the merged support.
double wasserstein_1d(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

struct WdOptions {
    // Per-channel pooled sample cap; larger pools are stride-subsampled in input order.
    std::size_t sample_cap = 1'000'000;
};

// a, b in [-128, 127] mapped affinely onto [0, 1].
inline double normalize_chroma(double v) noexcept { return (v + 128.0) / 255.0; }

// Mean of the a-channel and b-channel distances between pooled pixel sets.
double wd_color_lab(std::span<const LabImage> generated, std::span<const LabImage> target,
                    const WdOptions& options = {});
double wd_color(std::span<const ImageTile> generated, std::span<const ImageTile> target,
                const WdOptions& options = {});

// ---------------------------------------------------------------------------
// Frechet distance between Gaussian fits
// ---------------------------------------------------------------------------

struct FeatureGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::size_t sample_count = 0;
};

// Sample mean and (N - 1)-normalised covariance, symmetrised.
FeatureGaussian fit_feature_gaussian(const Eigen::MatrixXd& features);

// Principal square root of a symmetric PSD matrix; negative eigenvalues are
// clamped to zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

// |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2), clamped at zero.
double frechet_distance(const FeatureGaussian& g1, const FeatureGaussian& g2);

namespace serial {

SsimResult ssim(const GrayImage& x, const GrayImage& y, int window = 7, double data_range = 255.0,
                bool keep_map = false);

} // namespace serial

} // namespace stainbench
