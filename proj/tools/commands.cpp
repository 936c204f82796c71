#include "commands.hpp"

#include "stainbench/color.hpp"
#include "stainbench/datapipe.hpp"
#include "stainbench/error.hpp"
#include "stainbench/features.hpp"
#include "stainbench/image_io.hpp"
#include "stainbench/metrics.hpp"
#include "stainbench/profile_io.hpp"
#include "stainbench/report.hpp"
#include "stainbench/stain.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

namespace stainbench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Manifest select(const Manifest& m, const std::optional<std::string>& label, const std::optional<std::string>& split) {
    Manifest out = m;
    if (split) out = out.filter(parse_split(*split));
    if (label) out = out.filter_label(*label);
    return out;
}

std::string relative_to(const fs::path& file, const fs::path& dir) {
    const auto base = fs::weakly_canonical(fs::absolute(dir));
    return fs::weakly_canonical(fs::absolute(file)).lexically_relative(base).generic_string();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

} // namespace

void cmd_tile(const TileArgs& args, const RunConfig& config) {
    if (args.inputs.empty() && args.index_dirs.empty()) throw UsageError("tile needs --input or --index");
    const Split split = parse_split(args.split);
    const std::string label = StainLabel::parse(args.label).str();
    const fs::path manifest_path = args.manifest.value_or(args.out_dir / "manifest.jsonl");
    const fs::path manifest_dir = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();

    std::vector<ManifestRecord> records;
    for (const auto& input : args.inputs) {
        ImageTile image = read_image(input);
        image.set_label(StainLabel::parse(label));
        const auto tiles = extract_tiles(image, config.tiling);
        for (const auto& t : tiles) {
            const fs::path file = args.out_dir / (t.id() + ".png");
            write_image(file, t);
            records.push_back({relative_to(file, manifest_dir), t.id(), label, split,
                               args.source_id.empty() ? image.id() : args.source_id, std::nullopt});
        }
        std::cerr << input.string() << ": " << tiles.size() << " of "
                  << tile_grid_count(config.tiling.subsample2 ? image.width() / 2 : image.width(),
                                     config.tiling.subsample2 ? image.height() / 2 : image.height(),
                                     config.tiling.tile_size, config.tiling.stride)
                  << " grid tiles kept\n";
    }
    if (!args.index_dirs.empty()) {
        std::vector<ManifestSource> sources;
        for (const auto& dir : args.index_dirs) sources.push_back({dir, label, split, args.source_id, ""});
        const Manifest indexed = build_manifest(sources, manifest_dir);
        records.insert(records.end(), indexed.records().begin(), indexed.records().end());
    }
    const Manifest manifest(std::move(records), manifest_dir);
    manifest.validate();
    save_manifest(manifest_path, manifest);
    std::cout << "tiles " << manifest.size() << " manifest " << manifest_path.string() << " hash "
              << manifest.hash() << '\n';
}

void cmd_fit(const FitArgs& args, const RunConfig& config) {
    const Manifest manifest = select(load_manifest(args.manifest), args.label, args.split);
    if (manifest.empty()) throw DataError("no tiles selected from " + args.manifest.string());
    const auto tiles = load_tiles(manifest);
    AnyProfile profile;
    if (config.method == "colorstat") {
        profile = fit_colorstat(tiles);
    } else {
        StainProfile sp = fit_stain_profile(tiles, parse_stain_method(config.method), config.stain);
        if (sp.fit.skipped) std::cerr << "skipped " << sp.fit.skipped << " of " << sp.fit.corpus_size << " tiles\n";
        profile = sp;
    }
    save_profile(args.out, profile);
    std::cout << "profile " << args.out.string() << " method " << config.method << " tiles " << tiles.size() << '\n';
}

void cmd_transfer(const TransferArgs& args, const RunConfig&) {
    const AnyProfile profile = load_profile(args.profile);
    const Manifest manifest = select(load_manifest(args.manifest), args.label, args.split);
    const fs::path manifest_path = args.out_manifest.value_or(args.out_dir / "manifest.jsonl");
    const fs::path manifest_dir = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();

    std::string target_label;
    std::optional<ConcentrationSolver> solver;
    if (args.solver) solver = parse_solver(*args.solver);
    if (const auto* cs = std::get_if<ColorStatProfile>(&profile)) {
        target_label = cs->fit.stain_label;
    } else {
        target_label = std::get<StainProfile>(profile).fit.stain_label;
    }

    const auto& in = manifest.records();
    std::vector<ManifestRecord> out(in.size());
    std::vector<double> seconds(in.size(), 0.0);
    std::vector<std::optional<std::string>> errors(in.size());
    const auto n = static_cast<std::ptrdiff_t>(in.size());
    const auto wall_start = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const ImageTile tile = read_image(manifest.resolve(in[i]));
            const auto t0 = std::chrono::steady_clock::now();
            ImageTile result;
            std::optional<std::string> flag;
            if (const auto* cs = std::get_if<ColorStatProfile>(&profile)) {
                result = apply_colorstat(tile, *cs);
            } else {
                const auto& sp = std::get<StainProfile>(profile);
                TransferOutcome outcome = apply_stain_transfer(tile, sp, solver.value_or(sp.params.solver));
                if (outcome.passthrough) flag = std::string("passthrough:") + to_string(*outcome.passthrough);
                result = std::move(outcome.tile);
            }
            seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const fs::path file = args.out_dir / (in[i].id + ".png");
            write_image(file, result);
            ManifestRecord r = in[i];
            r.tile_path = relative_to(file, manifest_dir);
            if (!target_label.empty()) r.stain_label = target_label;
            r.flag = flag;
            out[i] = std::move(r);
        } catch (const std::exception& e) {
            errors[i] = in[i].id + ": " + e.what();
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    for (const auto& e : errors) {
        if (e) throw DataError(*e);
    }

    const Manifest result(std::move(out), manifest_dir);
    save_manifest(manifest_path, result);
    std::size_t flagged = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < seconds.size(); ++i) {
        total += seconds[i];
        flagged += result.records()[i].flag.has_value();
    }
    const double mean = seconds.empty() ? 0.0 : total / static_cast<double>(seconds.size());
    const json timing{{"tiles", seconds.size()},
                      {"mean_seconds_per_tile", mean},
                      {"total_transfer_seconds", total},
                      {"wall_seconds", wall},
                      {"workers", omp_get_max_threads()},
                      {"flagged", flagged}};
    write_text(args.timing.value_or(args.out_dir / "timing.json"), timing.dump(2) + "\n");
    std::cout << "transferred " << seconds.size() << " tiles, " << flagged << " flagged, mean "
              << mean << " s/tile, manifest hash " << result.hash() << '\n';
}

namespace {

// Generated tiles matched to source tiles by id.
std::vector<std::pair<std::size_t, std::size_t>> pair_by_id(const Manifest& source, const Manifest& generated) {
    std::map<std::string, std::size_t> src;
    for (std::size_t i = 0; i < source.size(); ++i) src[source.records()[i].id] = i;
    std::set<std::string> gen_ids;
    std::vector<std::string> offenders;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < generated.size(); ++j) {
        const auto& id = generated.records()[j].id;
        gen_ids.insert(id);
        const auto it = src.find(id);
        if (it == src.end()) {
            offenders.push_back(id + " (not in source)");
        } else {
            pairs.emplace_back(it->second, j);
        }
    }
    for (const auto& [id, i] : src) {
        if (!gen_ids.count(id)) offenders.push_back(id + " (not in generated)");
    }
    if (!offenders.empty()) {
        std::string message = std::to_string(offenders.size()) + " id mismatch(es) between source and generated:";
        for (std::size_t k = 0; k < offenders.size() && k < 10; ++k) message += " " + offenders[k];
        throw DataError(message);
    }
    return pairs;
}

Eigen::MatrixXd cached_features(const Manifest& manifest, const std::vector<ImageTile>& tiles,
                                const FeatureExtractor& extractor, const std::optional<fs::path>& cache_dir) {
    if (!cache_dir) return extract_features(tiles, extractor);
    const FeatureCacheKey key{manifest.hash(), extractor.name()};
    const fs::path path = feature_sidecar_path(*cache_dir, key);
    if (auto cached = read_feature_sidecar(path, key)) {
        if (cached->rows() == static_cast<Eigen::Index>(tiles.size())) return *cached;
    }
    Eigen::MatrixXd features = extract_features(tiles, extractor);
    write_feature_sidecar(path, key, features);
    return features;
}

} // namespace

void cmd_evaluate(const EvaluateArgs& args, RunConfig config) {
    const Manifest source = load_manifest(args.source);
    const Manifest generated = load_manifest(args.generated);
    const Manifest target = load_manifest(args.target);
    const auto pairs = pair_by_id(source, generated);
    if (pairs.empty()) throw DataError("no tiles to evaluate");

    const auto source_tiles = load_tiles(source);
    const auto generated_tiles = load_tiles(generated);
    const auto target_tiles = load_tiles(target);

    std::vector<double> scores(pairs.size());
    std::vector<std::optional<std::string>> errors(pairs.size());
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto& s = source_tiles[pairs[k].first];
        const auto& g = generated_tiles[pairs[k].second];
        try {
            scores[k] = ssim(rgb_to_gray(s), rgb_to_gray(g), config.ssim_window).mean_ssim;
        } catch (const std::exception& e) {
            errors[k] = s.id() + ": " + e.what();
        }
    }
    for (const auto& e : errors) {
        if (e) throw DataError(*e);
    }
    const MeanWithError ssim_summary = mean_with_stderr(scores);

    const double wd = wd_color(generated_tiles, target_tiles, WdOptions{config.wd_sample_cap});
    const auto extractor = make_extractor(config.extractor);
    const double fid_value = fid_from_features(cached_features(generated, generated_tiles, *extractor, args.feature_cache),
                                               cached_features(target, target_tiles, *extractor, args.feature_cache));

    config.inputs["source"] = source.hash();
    config.inputs["generated"] = generated.hash();
    config.inputs["target"] = target.hash();

    ReportRow row;
    row.method = args.method_name;
    row.direction = parse_direction(args.direction);
    if (row.direction == Direction::Averaged) throw UsageError("evaluate takes he2mt or mt2he; averages are derived");
    row.split = parse_split(args.split);
    row.fid = fid_value;
    row.wd = wd;
    row.ssim_mean = ssim_summary.mean;
    row.ssim_stderr = ssim_summary.standard_error;
    row.n_pairs = pairs.size();
    row.extractor_name = extractor->name();
    row.config_hash = config_hash(config);

    EvaluationReport report;
    if (args.append && fs::exists(args.out)) report = load_report(args.out);
    report.upsert(row, to_json(config));
    save_report(args.out, report);
    std::cout << row.method << " " << to_string(row.direction) << " " << to_string(row.split) << ": fid "
              << row.fid << " wd " << row.wd << " ssim " << row.ssim_mean << " ± " << row.ssim_stderr
              << " (" << row.n_pairs << " pairs)\n";
}

void cmd_report(const ReportArgs& args, const RunConfig& config) {
    const EvaluationReport report = load_report(args.input);
    const RenderOptions options{config.report.per_direction, config.report.decimals};
    const std::string md = render_markdown(report, options);
    if (args.csv) write_text(*args.csv, render_csv(report, options));
    if (args.markdown) {
        write_text(*args.markdown, md);
    } else {
        std::cout << md;
    }
}

void cmd_blindmix(const BlindMixArgs& args, const RunConfig& config) {
    if (args.score) {
        const auto key = read_blind_mix_answers(args.key);
        const auto answers = read_blind_mix_answers(*args.score);
        std::printf("accuracy %.6f (%zu entries)\n", score_blind_mix(key, answers), key.size());
        return;
    }
    if (!args.real || !args.artificial || !args.sheet) {
        throw UsageError("blindmix needs --real, --artificial, --sheet and --key (or --score and --key)");
    }
    const auto paths = [](const fs::path& p) {
        const Manifest m = load_manifest(p);
        std::vector<std::string> out;
        for (const auto& r : m.records()) out.push_back(m.resolve(r).generic_string());
        return out;
    };
    const auto sheet = blind_mix(paths(*args.real), paths(*args.artificial), args.n_each, config.seed);
    write_blind_mix(sheet, *args.sheet, args.key);
    std::cout << "sheet " << args.sheet->string() << " (" << sheet.entries.size() << " entries), key "
              << args.key.string() << '\n';
}

} // namespace stainbench::cli
