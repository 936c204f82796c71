#include "stainbench/color.hpp"
#include "stainbench/stain.hpp"

#include <optional>
#include <variant>

namespace stainbench {

StainMatrix estimate_stain_matrix(const OdMatrix& od, StainMethod method, const StainFitParams& params) {
    return method == StainMethod::Macenko ? estimate_stain_matrix_macenko(od, params.macenko)
                                          : fit_vahadane_dictionary(od, params.vahadane);
}

StainEstimate estimate_stain(const ImageTile& tile, StainMethod method, const StainFitParams& params) {
    const OdMatrix od = rgb_to_od(tile, params.background_intensity);
    StainEstimate out;
    out.stain_matrix = estimate_stain_matrix(od, method, params);
    const ConcentrationMatrix c = compute_concentrations(od, out.stain_matrix, params.solver);
    out.max_concentration = pseudo_max_concentration(c, params.max_percentile);
    return out;
}

StainProfile fit_stain_profile(std::span<const ImageTile> corpus, StainMethod method,
                               const StainFitParams& params) {
    if (corpus.empty()) throw CorpusFitError("cannot fit a stain profile on an empty corpus", {});

    using Result = std::variant<StainEstimate, std::string>;
    std::vector<Result> per_tile(corpus.size());
    const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            per_tile[i] = estimate_stain(corpus[i], method, params);
        } catch (const StainEstimationError& e) {
            per_tile[i] = corpus[i].id() + ": " + to_string(e.reason());
        }
    }

    StainMatrix matrix_sum = StainMatrix::Zero();
    Eigen::Vector2d max_sum = Eigen::Vector2d::Zero();
    std::size_t used = 0;
    std::vector<std::string> skipped;
    for (const auto& r : per_tile) {
        if (const auto* est = std::get_if<StainEstimate>(&r)) {
            matrix_sum += est->stain_matrix;
            max_sum += est->max_concentration;
            ++used;
        } else {
            skipped.push_back(std::get<std::string>(r));
        }
    }
    if (used == 0) {
        std::string message = "no usable tile among " + std::to_string(corpus.size());
        for (std::size_t i = 0; i < skipped.size() && i < 10; ++i) message += "; " + skipped[i];
        throw CorpusFitError(message, std::move(skipped));
    }

    StainProfile profile;
    profile.method = method;
    profile.stain_matrix = canonicalize_stain_matrix(matrix_sum / static_cast<double>(used));
    profile.max_concentration = max_sum / static_cast<double>(used);
    profile.params = params;
    profile.fit.corpus_size = corpus.size();
    profile.fit.skipped = skipped.size();
    profile.fit.stain_label = corpus.front().label().str();
    return profile;
}

OdMatrix transfer_optical_density(const OdMatrix& od, const StainMatrix& source,
                                  const StainProfile& target, ConcentrationSolver solver) {
    ConcentrationMatrix c = compute_concentrations(od, source, solver);
    const Eigen::Vector2d source_max = pseudo_max_concentration(c, target.params.max_percentile);
    Eigen::Vector2d scale = Eigen::Vector2d::Ones();
    for (int j = 0; j < 2; ++j) {
        if (source_max[j] > 1e-12) scale[j] = target.max_concentration[j] / source_max[j];
    }
    c = c * scale.asDiagonal();
    return c * target.stain_matrix.transpose();
}

TransferOutcome apply_stain_transfer(const ImageTile& tile, const StainProfile& target,
                                     ConcentrationSolver solver) {
    const double background = target.params.background_intensity;
    const OdMatrix od = rgb_to_od(tile, background);
    StainMatrix source;
    try {
        source = estimate_stain_matrix(od, target.method, target.params);
    } catch (const StainEstimationError& e) {
        return {tile, e.reason()};
    }

    const OdMatrix reconstructed = transfer_optical_density(od, source, target, solver);
    ImageTile out = od_to_rgb(reconstructed, tile.width(), tile.height(), background);
    out.set_id(tile.id());
    out.set_label(tile.label());
    return {std::move(out), std::nullopt};
}

} // namespace stainbench
