#pragma once

// Brute-force reference computations used only by tests. None of these share
// code with the library paths they check.

#include "stainbench/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace stainbench::oracle {

// Mean SSIM over every fully interior window, each window's statistics
// recomputed from scratch (two-pass, sample variance/covariance).
inline double ssim_direct(const GrayImage& x, const GrayImage& y, int win = 7, double range = 255.0) {
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const int n = win * win;
    double total = 0.0;
    long count = 0;
    for (int oy = 0; oy + win <= x.height; ++oy) {
        for (int ox = 0; ox + win <= x.width; ++ox) {
            double mx = 0.0, my = 0.0;
            for (int j = 0; j < win; ++j) {
                for (int i = 0; i < win; ++i) {
                    mx += x.at(ox + i, oy + j);
                    my += y.at(ox + i, oy + j);
                }
            }
            mx /= n;
            my /= n;
            double vx = 0.0, vy = 0.0, cxy = 0.0;
            for (int j = 0; j < win; ++j) {
                for (int i = 0; i < win; ++i) {
                    const double dx = x.at(ox + i, oy + j) - mx;
                    const double dy = y.at(ox + i, oy + j) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            vx /= (n - 1);
            vy /= (n - 1);
            cxy /= (n - 1);
            total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

// Integrates |F_a - F_b| on a uniform grid of step h. Exact when every sample
// is a multiple of h and the grid covers the samples.
inline double wasserstein_grid(const std::vector<double>& a, const std::vector<double>& b, double h) {
    const double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    const double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    const auto steps = static_cast<long>(std::llround((hi - lo) / h));
    double total = 0.0;
    for (long k = 0; k < steps; ++k) {
        const double v = lo + (static_cast<double>(k) + 0.5) * h;
        const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double s) { return s <= v; })) / a.size();
        const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double s) { return s <= v; })) / b.size();
        total += std::abs(fa - fb) * h;
    }
    return total;
}

inline double percentile_sorted(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= v.size()) return v.back();
    return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

inline double frechet_diagonal(const Eigen::VectorXd& mu1, const Eigen::VectorXd& var1,
                               const Eigen::VectorXd& mu2, const Eigen::VectorXd& var2) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < mu1.size(); ++i) {
        const double dm = mu1[i] - mu2[i];
        const double ds = std::sqrt(var1[i]) - std::sqrt(var2[i]);
        d += dm * dm + ds * ds;
    }
    return d;
}

inline void mean_cov_two_pass(const Eigen::MatrixXd& f, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
    const Eigen::Index n = f.rows(), d = f.cols();
    mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) mean[j] += f(i, j);
    }
    mean /= static_cast<double>(n);
    cov = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) cov(a, b) += (f(i, a) - mean[a]) * (f(i, b) - mean[b]);
        }
    }
    cov /= static_cast<double>(n - 1);
}

inline double cosine(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return a.dot(b) / (a.norm() * b.norm());
}

// Best cosine pairing of two 3x2 column sets up to column order.
template <typename A, typename B>
inline double min_matched_cosine(const A& got, const B& want) {
    const double straight = std::min(cosine(got.col(0), want.col(0)), cosine(got.col(1), want.col(1)));
    const double swapped = std::min(cosine(got.col(0), want.col(1)), cosine(got.col(1), want.col(0)));
    return std::max(straight, swapped);
}

} // namespace stainbench::oracle
