#include "commands.hpp"

#include "stainbench/error.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <optional>

using namespace stainbench;

namespace {

int report_error(ExitCode code, const char* kind, const std::string& message) {
    const nlohmann::json line{{"error", {{"code", static_cast<int>(code)}, {"kind", kind}, {"message", message}}}};
    std::cerr << line.dump() << '\n';
    return static_cast<int>(code);
}

int default_workers() {
    if (const char* env = std::getenv("STAINBENCH_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        throw UsageError(std::string("STAINBENCH_WORKERS must be a positive integer, got '") + env + "'");
    }
    return 0;
}

struct Overrides {
    std::optional<std::filesystem::path> config_file;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<std::string> solver;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> lambda;
    std::optional<int> max_iters;
    std::optional<double> tol;
    std::optional<double> max_percentile;
    std::optional<int> tile_size;
    std::optional<int> stride;
    std::optional<double> min_tissue;
    bool subsample2 = false;
    std::optional<std::string> extractor;
    std::optional<std::size_t> wd_cap;
    bool per_direction = false;
    std::optional<int> decimals;

    RunConfig materialize() const {
        RunConfig c = config_file ? load_config(*config_file) : RunConfig{};
        if (seed) c.seed = *seed;
        if (method) c.method = *method;
        if (solver) c.stain.solver = parse_solver(*solver);
        if (alpha) c.stain.macenko.alpha_percentile = *alpha;
        if (beta) c.stain.macenko.tissue.beta_od_threshold = c.stain.vahadane.tissue.beta_od_threshold = *beta;
        if (lambda) c.stain.vahadane.sparsity_lambda = *lambda;
        if (max_iters) c.stain.vahadane.max_iters = *max_iters;
        if (tol) c.stain.vahadane.tol = *tol;
        if (max_percentile) c.stain.max_percentile = *max_percentile;
        if (tile_size) c.tiling.tile_size = *tile_size;
        if (stride) c.tiling.stride = *stride;
        if (tile_size && !stride) c.tiling.stride = *tile_size;
        if (min_tissue) c.tiling.min_tissue_fraction = *min_tissue;
        if (subsample2) c.tiling.subsample2 = true;
        if (extractor) c.extractor = *extractor;
        if (wd_cap) c.wd_sample_cap = *wd_cap;
        if (per_direction) c.report.per_direction = true;
        if (decimals) c.report.decimals = *decimals;
        // Round-trip validates the method name and every value range the parser checks.
        return config_from_json(to_json(c));
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stain transfer baselines and evaluation metrics for histology tiles"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config_file, "JSON run config; flags override its values")->check(CLI::ExistingFile);
    app.add_option("--workers", o.workers, "worker threads (default: $STAINBENCH_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "random seed");

    cli::TileArgs tile;
    auto* tile_cmd = app.add_subcommand("tile", "cut images into tissue tiles and write a manifest");
    tile_cmd->add_option("--input", tile.inputs, "source image(s)")->check(CLI::ExistingFile);
    tile_cmd->add_option("--index", tile.index_dirs, "directories of existing tiles to index")->check(CLI::ExistingDirectory);
    tile_cmd->add_option("--out", tile.out_dir, "output tile directory")->required();
    tile_cmd->add_option("--manifest", tile.manifest, "manifest path (default: OUT/manifest.jsonl)");
    tile_cmd->add_option("--label", tile.label, "stain label (HE, MT, ...)");
    tile_cmd->add_option("--split", tile.split, "train, val or test");
    tile_cmd->add_option("--source-id", tile.source_id, "source image id (default: image file stem)");
    tile_cmd->add_option("--size", o.tile_size, "tile edge in pixels");
    tile_cmd->add_option("--stride", o.stride, "grid stride in pixels (default: size)");
    tile_cmd->add_option("--min-tissue", o.min_tissue, "minimum tissue fraction to keep a tile");
    tile_cmd->add_flag("--subsample2", o.subsample2, "bicubic 1:2 downscale before tiling");

    cli::FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a target profile averaged over a corpus");
    fit_cmd->add_option("--manifest", fit.manifest, "corpus manifest")->required();
    fit_cmd->add_option("--label", fit.label, "only tiles with this stain label");
    fit_cmd->add_option("--split", fit.split, "only tiles of this split");
    fit_cmd->add_option("--out", fit.out, "profile JSON")->required();

    cli::TransferArgs transfer;
    auto* transfer_cmd = app.add_subcommand("transfer", "apply a fitted profile to every tile of a manifest");
    transfer_cmd->add_option("--profile", transfer.profile, "profile JSON")->required()->check(CLI::ExistingFile);
    transfer_cmd->add_option("--manifest", transfer.manifest, "input manifest")->required();
    transfer_cmd->add_option("--label", transfer.label, "only tiles with this stain label");
    transfer_cmd->add_option("--split", transfer.split, "only tiles of this split");
    transfer_cmd->add_option("--out", transfer.out_dir, "output tile directory")->required();
    transfer_cmd->add_option("--out-manifest", transfer.out_manifest, "output manifest (default: OUT/manifest.jsonl)");
    transfer_cmd->add_option("--timing", transfer.timing, "timing JSON (default: OUT/timing.json)");
    transfer_cmd->add_option("--solver", transfer.solver, "concentration solver: nnls or lstsq (default: the profile's)");

    for (auto* cmd : {fit_cmd, transfer_cmd}) {
        cmd->add_option("--method", o.method, "colorstat, macenko or vahadane");
        cmd->add_option("--alpha", o.alpha, "Macenko angle percentile");
        cmd->add_option("--beta", o.beta, "tissue OD threshold");
        cmd->add_option("--lambda", o.lambda, "Vahadane sparsity weight");
        cmd->add_option("--max-iters", o.max_iters, "Vahadane iteration cap");
        cmd->add_option("--tol", o.tol, "Vahadane relative tolerance");
        cmd->add_option("--max-percentile", o.max_percentile, "pseudo-maximum percentile");
    }
    fit_cmd->add_option("--solver", o.solver, "concentration solver: nnls or lstsq");

    cli::EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score generated tiles with FID, WD and SSIM");
    evaluate_cmd->add_option("--source", evaluate.source, "source manifest (SSIM pairs)")->required();
    evaluate_cmd->add_option("--generated", evaluate.generated, "generated manifest")->required();
    evaluate_cmd->add_option("--target", evaluate.target, "target-domain manifest (WD, FID)")->required();
    evaluate_cmd->add_option("--method-name", evaluate.method_name, "row label")->required();
    evaluate_cmd->add_option("--direction", evaluate.direction, "he2mt or mt2he")->required();
    evaluate_cmd->add_option("--split", evaluate.split, "train, val or test");
    evaluate_cmd->add_option("--out", evaluate.out, "report JSON")->required();
    evaluate_cmd->add_flag("--append", evaluate.append, "merge into an existing report");
    evaluate_cmd->add_option("--extractor", o.extractor, "builtin or mlp:<model.json>");
    evaluate_cmd->add_option("--feature-cache", evaluate.feature_cache, "directory for feature sidecars");
    evaluate_cmd->add_option("--wd-cap", o.wd_cap, "pooled samples per chroma channel");

    cli::ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "render a report as CSV and Markdown");
    report_cmd->add_option("--input", report.input, "report JSON")->required();
    report_cmd->add_option("--csv", report.csv, "CSV output");
    report_cmd->add_option("--markdown", report.markdown, "Markdown output (default: stdout)");
    report_cmd->add_flag("--per-direction", o.per_direction, "one row per translation direction");
    report_cmd->add_option("--decimals", o.decimals, "decimals for FID and WD");

    cli::BlindMixArgs blind;
    auto* blind_cmd = app.add_subcommand("blindmix", "build or score a shuffled real/artificial sheet");
    blind_cmd->add_option("--real", blind.real, "manifest of real tiles");
    blind_cmd->add_option("--artificial", blind.artificial, "manifest of artificial tiles");
    blind_cmd->add_option("--n-each", blind.n_each, "tiles drawn per class");
    blind_cmd->add_option("--sheet", blind.sheet, "presentation CSV");
    blind_cmd->add_option("--key", blind.key, "sealed key CSV")->required();
    blind_cmd->add_option("--score", blind.score, "answers CSV to score against the key");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(ExitCode::Usage, "usage", e.what());
    }

    try {
        const int workers = o.workers.value_or(default_workers());
        if (workers > 0) omp_set_num_threads(workers);
        const RunConfig config = o.materialize();

        if (*tile_cmd) cli::cmd_tile(tile, config);
        else if (*fit_cmd) cli::cmd_fit(fit, config);
        else if (*transfer_cmd) cli::cmd_transfer(transfer, config);
        else if (*evaluate_cmd) cli::cmd_evaluate(evaluate, config);
        else if (*report_cmd) cli::cmd_report(report, config);
        else if (*blind_cmd) cli::cmd_blindmix(blind, config);
    } catch (const Error& e) {
        return report_error(e.code(), e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error(ExitCode::Data, "data", e.what());
    }
    return 0;
}
