#include "stainbench/nnls.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>

namespace stainbench {

namespace {

double quadratic(const Eigen::Matrix2d& g, const Eigen::Vector2d& b, const Eigen::Vector2d& x) {
    return x.dot(g * x) - 2.0 * b.dot(x);
}

double determinant_floor(const Eigen::Matrix2d& g) {
    return 1e-14 * g(0, 0) * g(1, 1);
}

} // namespace

Eigen::Vector2d lstsq2(const Eigen::Matrix2d& gram, const Eigen::Vector2d& rhs) noexcept {
    const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    if (std::abs(det) > determinant_floor(gram) && det != 0.0) {
        return {(gram(1, 1) * rhs[0] - gram(0, 1) * rhs[1]) / det,
                (gram(0, 0) * rhs[1] - gram(1, 0) * rhs[0]) / det};
    }
    return gram.completeOrthogonalDecomposition().solve(rhs);
}

Eigen::Vector2d nnls2(const Eigen::Matrix2d& gram, const Eigen::Vector2d& rhs) noexcept {
    const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    if (det > determinant_floor(gram) && det > 0.0) {
        const Eigen::Vector2d x{(gram(1, 1) * rhs[0] - gram(0, 1) * rhs[1]) / det,
                                (gram(0, 0) * rhs[1] - gram(1, 0) * rhs[0]) / det};
        // Interior optimum of a strictly convex quadratic is the global one.
        if (x[0] >= 0.0 && x[1] >= 0.0) return x;
    }

    std::array<Eigen::Vector2d, 3> candidates{
        Eigen::Vector2d::Zero(),
        Eigen::Vector2d{gram(0, 0) > 0.0 ? std::max(0.0, rhs[0] / gram(0, 0)) : 0.0, 0.0},
        Eigen::Vector2d{0.0, gram(1, 1) > 0.0 ? std::max(0.0, rhs[1] / gram(1, 1)) : 0.0},
    };
    Eigen::Vector2d best = candidates[0];
    double best_value = 0.0;
    for (const auto& c : candidates) {
        const double v = quadratic(gram, rhs, c);
        if (v < best_value) {
            best_value = v;
            best = c;
        }
    }
    return best;
}

} // namespace stainbench
