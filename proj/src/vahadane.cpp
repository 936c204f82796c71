#include "stainbench/nnls.hpp"
#include "stainbench/numeric.hpp"
#include "stainbench/stain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stainbench {

namespace {

// ||X - C W'||_F^2 + lambda * sum(C), with C >= 0. Row partials keep the
// summation order fixed.
double objective(const OdMatrix& x, const ConcentrationMatrix& c, const StainMatrix& w,
                 double lambda) {
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
    std::vector<double> partial(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Eigen::Vector3d r = x.row(i).transpose() - w * c.row(i).transpose();
        partial[i] = r.squaredNorm() + lambda * (c(i, 0) + c(i, 1));
    }
    return std::accumulate(partial.begin(), partial.end(), 0.0);
}

// Exact per-row minimiser of ||x - W c||^2 + lambda * sum(c) over c >= 0.
ConcentrationMatrix sparse_codes(const OdMatrix& x, const StainMatrix& w, double lambda) {
    const Eigen::Matrix2d gram = w.transpose() * w;
    const Eigen::Vector2d shift = Eigen::Vector2d::Constant(0.5 * lambda);
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
    ConcentrationMatrix c(n, 2);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Eigen::Vector2d rhs = w.transpose() * x.row(i).transpose() - shift;
        c.row(i) = nnls2(gram, rhs).transpose();
    }
    return c;
}

// Non-negative least-squares dictionary for fixed codes; one 2-variable
// problem per OD channel.
StainMatrix dictionary_update(const OdMatrix& x, const ConcentrationMatrix& c) {
    const Eigen::Matrix2d gram = c.transpose() * c;
    const Eigen::Matrix<double, 2, 3> rhs = c.transpose() * x;
    StainMatrix w;
    for (int k = 0; k < 3; ++k) w.row(k) = nnls2(gram, rhs.col(k)).transpose();
    return w;
}

// Tissue rows at the 1st and 99th percentile of red share are the starting atoms.
StainMatrix initial_dictionary(const OdMatrix& x) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(static_cast<Eigen::Index>(i));
        key[i] = row(0) / row.norm();
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    const auto pick = [&](double p) {
        return order[static_cast<std::size_t>(std::floor(p / 100.0 * static_cast<double>(n - 1)))];
    };
    StainMatrix w;
    w.col(0) = x.row(static_cast<Eigen::Index>(pick(99.0))).transpose().normalized();
    w.col(1) = x.row(static_cast<Eigen::Index>(pick(1.0))).transpose().normalized();
    return w;
}

} // namespace

DictionaryFit learn_stain_dictionary(const OdMatrix& tissue_od, const VahadaneParams& params) {
    if (params.sparsity_lambda < 0.0) throw UsageError("sparsity lambda must be non-negative");
    if (params.max_iters < 0) throw UsageError("max_iters must be non-negative");
    if (static_cast<std::size_t>(tissue_od.rows()) < std::max<std::size_t>(params.tissue.min_tissue_pixels, 2)) {
        throw StainEstimationError(EstimationFailure::InsufficientTissue,
                                   std::to_string(tissue_od.rows()) + " tissue pixels");
    }
    const double lambda = params.sparsity_lambda;

    DictionaryFit fit;
    StainMatrix w = initial_dictionary(tissue_od);
    ConcentrationMatrix c = sparse_codes(tissue_od, w, lambda);
    double current = objective(tissue_od, c, w, lambda);
    fit.objective_trace.push_back(current);

    for (int iter = 0; iter < params.max_iters; ++iter) {
        StainMatrix target = dictionary_update(tissue_od, c);
        for (int j = 0; j < 2; ++j) {
            if (!(target.col(j).norm() > 1e-12)) target.col(j) = w.col(j);
        }

        // Unit-norm columns with codes rescaled to keep C W' fixed. The rescale
        // changes the l1 term, so the step is shortened until it does not
        // increase the objective.
        bool accepted = false;
        StainMatrix w_step;
        ConcentrationMatrix c_step;
        double step_value = current;
        for (double t = 1.0; t >= 1.0 / 256.0; t *= 0.5) {
            const StainMatrix blend = (1.0 - t) * w + t * target;
            const Eigen::Vector2d norms = blend.colwise().norm().transpose();
            if (!(norms.minCoeff() > 1e-12)) continue;
            w_step = blend * norms.cwiseInverse().asDiagonal();
            c_step = c * norms.asDiagonal();
            step_value = objective(tissue_od, c_step, w_step, lambda);
            if (step_value <= current) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        ConcentrationMatrix c_next = sparse_codes(tissue_od, w_step, lambda);
        double next = objective(tissue_od, c_next, w_step, lambda);
        if (next > step_value) {
            // The code step is an exact minimiser; only rounding can land here.
            c_next = c_step;
            next = step_value;
        }

        const double decrease = current - next;
        w = w_step;
        c = std::move(c_next);
        fit.objective_trace.push_back(next);
        ++fit.iterations;
        const double relative = decrease / std::max(current, 1e-300);
        current = next;
        if (relative < params.tol) break;
    }

    const auto key = [&](int j) { return std::array<double, 3>{w(0, j), w(1, j), w(2, j)}; };
    if (key(1) > key(0)) {
        w.col(0).swap(w.col(1));
        c.col(0).swap(c.col(1));
    }
    fit.stain_matrix = canonicalize_stain_matrix(w);
    fit.concentrations = std::move(c);
    return fit;
}

StainMatrix fit_vahadane_dictionary(const OdMatrix& od, const VahadaneParams& params) {
    return learn_stain_dictionary(tissue_rows(od, params.tissue), params).stain_matrix;
}

} // namespace stainbench
