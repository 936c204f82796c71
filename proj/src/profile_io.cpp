#include "stainbench/profile_io.hpp"

#include <fstream>

namespace stainbench {

using nlohmann::json;

namespace {

json fit_to_json(const FitMetadata& fit) {
    return {{"corpus_size", fit.corpus_size},
            {"skipped", fit.skipped},
            {"stain_label", fit.stain_label}};
}

FitMetadata fit_from_json(const json& doc) {
    FitMetadata fit;
    fit.corpus_size = doc.at("corpus_size").get<std::size_t>();
    fit.skipped = doc.at("skipped").get<std::size_t>();
    fit.stain_label = doc.value("stain_label", std::string{});
    return fit;
}

json tissue_to_json(const TissueFilter& t) {
    return {{"beta_od_threshold", t.beta_od_threshold}, {"min_tissue_pixels", t.min_tissue_pixels}};
}

TissueFilter tissue_from_json(const json& doc) {
    TissueFilter t;
    t.beta_od_threshold = doc.at("beta_od_threshold").get<double>();
    t.min_tissue_pixels = doc.at("min_tissue_pixels").get<std::size_t>();
    return t;
}

} // namespace

json to_json(const StainFitParams& p) {
    return {
        {"macenko", {{"alpha_percentile", p.macenko.alpha_percentile},
                     {"tissue", tissue_to_json(p.macenko.tissue)}}},
        {"vahadane", {{"sparsity_lambda", p.vahadane.sparsity_lambda},
                      {"max_iters", p.vahadane.max_iters},
                      {"tol", p.vahadane.tol},
                      {"tissue", tissue_to_json(p.vahadane.tissue)}}},
        {"solver", to_string(p.solver)},
        {"max_percentile", p.max_percentile},
        {"background_intensity", p.background_intensity},
    };
}

StainFitParams stain_params_from_json(const json& doc) {
    StainFitParams p;
    const json& m = doc.at("macenko");
    p.macenko.alpha_percentile = m.at("alpha_percentile").get<double>();
    p.macenko.tissue = tissue_from_json(m.at("tissue"));
    const json& v = doc.at("vahadane");
    p.vahadane.sparsity_lambda = v.at("sparsity_lambda").get<double>();
    p.vahadane.max_iters = v.at("max_iters").get<int>();
    p.vahadane.tol = v.at("tol").get<double>();
    p.vahadane.tissue = tissue_from_json(v.at("tissue"));
    p.solver = parse_solver(doc.at("solver").get<std::string>());
    p.max_percentile = doc.at("max_percentile").get<double>();
    p.background_intensity = doc.at("background_intensity").get<double>();
    return p;
}

json profile_to_json(const AnyProfile& profile) {
    if (const auto* cs = std::get_if<ColorStatProfile>(&profile)) {
        return {{"format", "stainbench.profile"},
                {"version", kProfileFormatVersion},
                {"method", "colorstat"},
                {"mean", cs->mean},
                {"std", cs->std},
                {"fit", fit_to_json(cs->fit)}};
    }
    const auto& sp = std::get<StainProfile>(profile);
    std::vector<double> matrix;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 2; ++c) matrix.push_back(sp.stain_matrix(r, c));
    }
    json fit = fit_to_json(sp.fit);
    fit["params"] = to_json(sp.params);
    return {{"format", "stainbench.profile"},
            {"version", kProfileFormatVersion},
            {"method", to_string(sp.method)},
            {"stain_matrix", matrix},
            {"max_concentration", {sp.max_concentration[0], sp.max_concentration[1]}},
            {"fit", fit}};
}

AnyProfile profile_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "stainbench.profile") {
            throw DataError("not a stain profile document");
        }
        const int version = doc.at("version").get<int>();
        if (version != kProfileFormatVersion) {
            throw DataError("unsupported profile version " + std::to_string(version));
        }
        const auto method = doc.at("method").get<std::string>();
        if (method == "colorstat") {
            ColorStatProfile cs;
            cs.mean = doc.at("mean").get<std::array<double, 3>>();
            cs.std = doc.at("std").get<std::array<double, 3>>();
            cs.fit = fit_from_json(doc.at("fit"));
            return cs;
        }
        StainProfile sp;
        sp.method = parse_stain_method(method);
        const auto matrix = doc.at("stain_matrix").get<std::vector<double>>();
        if (matrix.size() != 6) throw DataError("stain_matrix must hold 6 entries");
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 2; ++c) sp.stain_matrix(r, c) = matrix[static_cast<std::size_t>(r * 2 + c)];
        }
        const auto maxima = doc.at("max_concentration").get<std::array<double, 2>>();
        sp.max_concentration = {maxima[0], maxima[1]};
        sp.fit = fit_from_json(doc.at("fit"));
        sp.params = stain_params_from_json(doc.at("fit").at("params"));
        return sp;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed profile: ") + e.what());
    }
}

void save_profile(const std::filesystem::path& path, const AnyProfile& profile) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write profile: " + path.string());
    out << profile_to_json(profile).dump(2) << '\n';
}

AnyProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read profile: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed profile " + path.string() + ": " + e.what());
    }
    return profile_from_json(doc);
}

} // namespace stainbench
