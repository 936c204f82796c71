#pragma once

#include "stainbench/error.hpp"
#include "stainbench/image.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stainbench {

// ---------------------------------------------------------------------------
// Colour statistics transfer in LAB
// ---------------------------------------------------------------------------

struct FitMetadata {
    std::size_t corpus_size = 0;
    std::size_t skipped = 0;
    std::string stain_label;
};

struct ColorStatProfile {
    std::array<double, 3> mean{};
    std::array<double, 3> std{};
    FitMetadata fit;
};

// Per-channel mean and population standard deviation of the LAB image.
ColorStatProfile stats_lab(const ImageTile& tile);

// Unweighted average of the per-tile means and of the per-tile deviations.
ColorStatProfile fit_colorstat(std::span<const ImageTile> corpus);

// Standard deviations below this are treated as a constant channel, which maps
// to the target mean.
inline constexpr double kColorStatSigmaFloor = 1e-6;

ImageTile apply_colorstat(const ImageTile& tile, const ColorStatProfile& target);

// ---------------------------------------------------------------------------
// Two-stain optical density models
// ---------------------------------------------------------------------------

// Columns are unit-norm, non-negative OD directions. Column 0 is the stain with
// the larger red-channel density.
using StainMatrix = Eigen::Matrix<double, 3, 2>;

enum class StainMethod { Macenko, Vahadane };
enum class ConcentrationSolver { Lstsq, Nnls };

const char* to_string(StainMethod method) noexcept;
const char* to_string(ConcentrationSolver solver) noexcept;
StainMethod parse_stain_method(const std::string& text);
ConcentrationSolver parse_solver(const std::string& text);

struct TissueFilter {
    double beta_od_threshold = 0.15;
    std::size_t min_tissue_pixels = 100;
};

struct MacenkoParams {
    double alpha_percentile = 1.0;
    TissueFilter tissue;
};

struct VahadaneParams {
    double sparsity_lambda = 0.1;
    int max_iters = 200;
    double tol = 1e-6;
    TissueFilter tissue;
};

struct StainFitParams {
    MacenkoParams macenko;
    VahadaneParams vahadane;
    ConcentrationSolver solver = ConcentrationSolver::Nnls;
    double max_percentile = 99.0;
    double background_intensity = 255.0;
};

struct StainProfile {
    StainMethod method = StainMethod::Macenko;
    StainMatrix stain_matrix = StainMatrix::Zero();
    Eigen::Vector2d max_concentration = Eigen::Vector2d::Zero();
    StainFitParams params;
    FitMetadata fit;
};

// Rows whose density exceeds beta in every channel. Throws InsufficientTissue
// when fewer than min_tissue_pixels survive.
OdMatrix tissue_rows(const OdMatrix& od, const TissueFilter& filter);

// Sign-fixes each column (flip on negative mean), clamps residual negatives,
// normalises and orders the columns. Throws DegenerateStainPlane on a zero column.
StainMatrix canonicalize_stain_matrix(const StainMatrix& raw);

// Angular extremes of the tissue OD inside its principal plane, which must
// span at least this many radians.
inline constexpr double kMinStainSeparation = 1e-2;

StainMatrix estimate_stain_matrix_macenko(const OdMatrix& od, const MacenkoParams& params = {});

ConcentrationMatrix compute_concentrations(const OdMatrix& od, const StainMatrix& m,
                                           ConcentrationSolver solver = ConcentrationSolver::Nnls);

Eigen::Vector2d pseudo_max_concentration(const ConcentrationMatrix& c, double percentile = 99.0);

struct DictionaryFit {
    StainMatrix stain_matrix = StainMatrix::Zero();
    // Concentrations of the filtered tissue rows, columns ordered like stain_matrix.
    ConcentrationMatrix concentrations;
    // Objective ||OD - C W'||_F^2 + lambda ||C||_1 after the initial solve and
    // after every accepted iteration.
    std::vector<double> objective_trace;
    int iterations = 0;
};

// Sparse non-negative factorisation of already filtered OD rows.
DictionaryFit learn_stain_dictionary(const OdMatrix& tissue_od, const VahadaneParams& params = {});

// Vahadane estimation on raw OD: tissue filtering followed by learn_stain_dictionary.
StainMatrix fit_vahadane_dictionary(const OdMatrix& od, const VahadaneParams& params = {});

StainMatrix estimate_stain_matrix(const OdMatrix& od, StainMethod method, const StainFitParams& params);

// Per-image estimate: stain matrix plus pseudo-maxima of all pixel concentrations.
struct StainEstimate {
    StainMatrix stain_matrix;
    Eigen::Vector2d max_concentration;
};

StainEstimate estimate_stain(const ImageTile& tile, StainMethod method, const StainFitParams& params);

// Averages per-tile estimates over the corpus; tiles failing estimation are
// skipped and counted. Throws CorpusFitError when none is usable.
StainProfile fit_stain_profile(std::span<const ImageTile> corpus, StainMethod method,
                               const StainFitParams& params = {});

// Core transfer algebra: concentrations against the source matrix, rescaled
// by target / source pseudo-maxima, recombined with the target matrix.
OdMatrix transfer_optical_density(const OdMatrix& od, const StainMatrix& source,
                                  const StainProfile& target, ConcentrationSolver solver);

struct TransferOutcome {
    ImageTile tile;
    // Set when estimation failed and the input was passed through unchanged.
    std::optional<EstimationFailure> passthrough;
};

TransferOutcome apply_stain_transfer(const ImageTile& tile, const StainProfile& target,
                                     ConcentrationSolver solver);
inline TransferOutcome apply_stain_transfer(const ImageTile& tile, const StainProfile& target) {
    return apply_stain_transfer(tile, target, target.params.solver);
}

namespace serial {

ConcentrationMatrix compute_concentrations(const OdMatrix& od, const StainMatrix& m,
                                           ConcentrationSolver solver = ConcentrationSolver::Nnls);
ColorStatProfile stats_lab(const ImageTile& tile);

} // namespace serial

} // namespace stainbench
