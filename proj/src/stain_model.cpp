#include "stainbench/nnls.hpp"
#include "stainbench/numeric.hpp"
#include "stainbench/stain.hpp"

#include <algorithm>
#include <cctype>

namespace stainbench {

const char* to_string(StainMethod method) noexcept {
    return method == StainMethod::Macenko ? "macenko" : "vahadane";
}

const char* to_string(ConcentrationSolver solver) noexcept {
    return solver == ConcentrationSolver::Nnls ? "nnls" : "lstsq";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

StainMethod parse_stain_method(const std::string& text) {
    const std::string t = lower(text);
    if (t == "macenko") return StainMethod::Macenko;
    if (t == "vahadane") return StainMethod::Vahadane;
    throw UsageError("unknown stain method '" + text + "'");
}

ConcentrationSolver parse_solver(const std::string& text) {
    const std::string t = lower(text);
    if (t == "nnls") return ConcentrationSolver::Nnls;
    if (t == "lstsq") return ConcentrationSolver::Lstsq;
    throw UsageError("unknown concentration solver '" + text + "'");
}

OdMatrix tissue_rows(const OdMatrix& od, const TissueFilter& filter) {
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(od.rows()));
    for (Eigen::Index i = 0; i < od.rows(); ++i) {
        if (od(i, 0) > filter.beta_od_threshold && od(i, 1) > filter.beta_od_threshold &&
            od(i, 2) > filter.beta_od_threshold) {
            keep.push_back(i);
        }
    }
    if (keep.size() < filter.min_tissue_pixels) {
        throw StainEstimationError(EstimationFailure::InsufficientTissue,
                                   std::to_string(keep.size()) + " tissue pixels, need " +
                                       std::to_string(filter.min_tissue_pixels));
    }
    OdMatrix out(static_cast<Eigen::Index>(keep.size()), 3);
    for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = od.row(keep[k]);
    return out;
}

StainMatrix canonicalize_stain_matrix(const StainMatrix& raw) {
    StainMatrix m = raw;
    for (int j = 0; j < 2; ++j) {
        if (m.col(j).mean() < 0.0) m.col(j) = -m.col(j);
        m.col(j) = m.col(j).cwiseMax(0.0);
        const double norm = m.col(j).norm();
        if (!(norm > 1e-12)) {
            throw StainEstimationError(EstimationFailure::DegenerateStainPlane,
                                       "stain column vanished after sign fixing");
        }
        m.col(j) /= norm;
    }
    const auto key = [&](int j) { return std::array<double, 3>{m(0, j), m(1, j), m(2, j)}; };
    if (key(1) > key(0)) m.col(0).swap(m.col(1));
    return m;
}

ConcentrationMatrix compute_concentrations(const OdMatrix& od, const StainMatrix& m,
                                           ConcentrationSolver solver) {
    const Eigen::Matrix2d gram = m.transpose() * m;
    const auto n = static_cast<std::ptrdiff_t>(od.rows());
    ConcentrationMatrix c(n, 2);
    if (solver == ConcentrationSolver::Nnls) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const Eigen::Vector2d rhs = m.transpose() * od.row(i).transpose();
            c.row(i) = nnls2(gram, rhs).transpose();
        }
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const Eigen::Vector2d rhs = m.transpose() * od.row(i).transpose();
            c.row(i) = lstsq2(gram, rhs).transpose();
        }
    }
    return c;
}

Eigen::Vector2d pseudo_max_concentration(const ConcentrationMatrix& c, double pct) {
    if (c.rows() < 1) throw DataError("pseudo-maximum of an empty concentration matrix");
    Eigen::Vector2d out;
    std::vector<double> column(static_cast<std::size_t>(c.rows()));
    for (int j = 0; j < 2; ++j) {
        for (Eigen::Index i = 0; i < c.rows(); ++i) column[static_cast<std::size_t>(i)] = c(i, j);
        out[j] = percentile(column, pct);
    }
    return out;
}

namespace serial {

ConcentrationMatrix compute_concentrations(const OdMatrix& od, const StainMatrix& m,
                                           ConcentrationSolver solver) {
    const Eigen::Matrix2d gram = m.transpose() * m;
    ConcentrationMatrix c(od.rows(), 2);
    for (Eigen::Index i = 0; i < od.rows(); ++i) {
        const Eigen::Vector2d rhs = m.transpose() * od.row(i).transpose();
        c.row(i) = (solver == ConcentrationSolver::Nnls ? nnls2(gram, rhs) : lstsq2(gram, rhs)).transpose();
    }
    return c;
}

} // namespace serial

} // namespace stainbench
