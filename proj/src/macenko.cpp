#include "stainbench/numeric.hpp"
#include "stainbench/stain.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace stainbench {

StainMatrix estimate_stain_matrix_macenko(const OdMatrix& od, const MacenkoParams& params) {
    if (!(params.alpha_percentile >= 0.0 && params.alpha_percentile < 50.0)) {
        throw UsageError("Macenko alpha percentile must lie in [0, 50)");
    }
    const OdMatrix tissue = tissue_rows(od, params.tissue);

    // Right singular vectors of the tissue OD are the eigenvectors of its Gram matrix.
    const Eigen::Matrix3d gram = tissue.transpose() * tissue;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
    const Eigen::Vector3d values = eig.eigenvalues();
    if (!(values[1] > 1e-12 * values[2])) {
        throw StainEstimationError(EstimationFailure::DegenerateStainPlane,
                                   "optical densities are rank one");
    }
    Eigen::Vector3d first = eig.eigenvectors().col(2);
    const Eigen::Vector3d second = eig.eigenvectors().col(1);
    if (first.sum() < 0.0) first = -first;

    std::vector<double> angles(static_cast<std::size_t>(tissue.rows()));
    for (Eigen::Index i = 0; i < tissue.rows(); ++i) {
        const Eigen::Vector3d row = tissue.row(i).transpose();
        angles[static_cast<std::size_t>(i)] = std::atan2(row.dot(second), row.dot(first));
    }
    const double lo = percentile(angles, params.alpha_percentile);
    const double hi = percentile(angles, 100.0 - params.alpha_percentile);
    if (!(hi - lo >= kMinStainSeparation)) {
        throw StainEstimationError(EstimationFailure::DegenerateStainPlane,
                                   "stain directions are not separable (angular spread " +
                                       std::to_string(hi - lo) + " rad)");
    }

    StainMatrix raw;
    raw.col(0) = first * std::cos(lo) + second * std::sin(lo);
    raw.col(1) = first * std::cos(hi) + second * std::sin(hi);
    return canonicalize_stain_matrix(raw);
}

} // namespace stainbench
