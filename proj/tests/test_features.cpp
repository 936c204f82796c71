#include "doctest.h"

#include "stainbench/error.hpp"
#include "stainbench/features.hpp"
#include "stainbench/numeric.hpp"
#include "support/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace stainbench;
using stainbench::testing::planted_he_matrix;
using stainbench::testing::stained_tile;

namespace {

std::vector<ImageTile> corpus(int n, std::uint64_t seed) {
    std::vector<ImageTile> out;
    for (int i = 0; i < n; ++i) out.push_back(stained_tile(48, 48, planted_he_matrix(), seed + i));
    return out;
}

std::vector<ImageTile> with_noise(const std::vector<ImageTile>& tiles, int amplitude, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ImageTile> out;
    for (const auto& t : tiles) {
        ImageTile copy = t;
        for (int y = 0; y < t.height(); ++y) {
            for (int x = 0; x < t.width(); ++x) {
                Rgb p = copy.at(x, y);
                for (auto& c : p) {
                    c = static_cast<std::uint8_t>(std::clamp<int>(c + int(rng.below(2 * amplitude + 1)) - amplitude, 0, 255));
                }
                copy.set(x, y, p);
            }
        }
        out.push_back(std::move(copy));
    }
    return out;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("stainbench_features_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("reference extractor is deterministic and seed dependent") {
    const ReferenceExtractor a, b, c(7);
    const auto tile = stained_tile(16, 16, planted_he_matrix(), 3);
    CHECK(a.extract(tile) == b.extract(tile));
    CHECK(a.extract(tile) != c.extract(tile));
    CHECK(a.name() == b.name());
    CHECK(a.name() != c.name());
    CHECK(a.dimension() == 64);
    const Eigen::VectorXd f = a.extract(tile);
    CHECK(f.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("extract_features resizes and keeps input order") {
    const auto tiles = corpus(5, 40);
    const ReferenceExtractor ex;
    const Eigen::MatrixXd f = extract_features(tiles, ex);
    CHECK(f.rows() == 5);
    CHECK(f.cols() == 64);
    const std::vector<ImageTile> one{tiles[3]};
    CHECK(extract_features(one, ex).row(0) == f.row(3));
    CHECK(serial::extract_features(tiles, ex) == f);
}

TEST_CASE("fid properties") {
    const ReferenceExtractor ex;
    const auto s = corpus(40, 100);
    const auto t = corpus(40, 500);
    CHECK(fid(s, s, ex) < 1e-6);
    CHECK(fid(s, t, ex) == doctest::Approx(fid(t, s, ex)).epsilon(1e-9));

    const double mild = fid(with_noise(s, 10, 1), s, ex);
    const double strong = fid(with_noise(s, 60, 1), s, ex);
    CHECK(mild > 0.0);
    CHECK(strong > mild);

    const std::vector<ImageTile> single{s[0]};
    CHECK_THROWS_AS(fid(single, s, ex), DataError);
}

TEST_CASE("fid depends on set size through the covariance estimate") {
    const ReferenceExtractor ex;
    const auto big = corpus(60, 1000);
    const auto other = corpus(60, 2000);
    const std::vector<ImageTile> small(other.begin(), other.begin() + 6);
    CHECK(fid(small, big, ex) > fid(other, big, ex));
}

TEST_CASE("mlp extractor loads and evaluates a small network") {
    const auto dir = temp_dir("mlp");
    nlohmann::json layer1{{"weights", nlohmann::json::array()}, {"bias", {0.0, -1.0}}, {"activation", "relu"}};
    std::vector<double> ones(12, 1.0), alternating(12, 0.0);
    for (int i = 0; i < 12; i += 2) alternating[i] = 1.0;
    layer1["weights"] = {ones, alternating};
    nlohmann::json layer2{{"weights", {{1.0, 2.0}}}, {"bias", {0.5}}, {"activation", "linear"}};
    nlohmann::json doc{{"format", "stainbench.mlp"}, {"version", 1}, {"name", "tiny"},
                       {"input_width", 2}, {"input_height", 2}, {"layers", {layer1, layer2}}};
    std::ofstream(dir / "tiny.json") << doc.dump();

    const auto ex = make_extractor("mlp:" + (dir / "tiny.json").string());
    CHECK(ex->name() == "tiny");
    CHECK(ex->dimension() == 1);
    const ImageTile white = ImageTile::filled(2, 2, {255, 255, 255});
    // hidden = relu(12, 6 - 1) = (12, 5); out = 12 + 10 + 0.5
    CHECK(ex->extract(white)[0] == doctest::Approx(22.5));
    const std::vector<ImageTile> big{ImageTile::filled(8, 8, {255, 255, 255})};
    CHECK(extract_features(big, *ex)(0, 0) == doctest::Approx(22.5));

    doc["layers"][1]["activation"] = "gelu";
    std::ofstream(dir / "bad.json") << doc.dump();
    CHECK_THROWS_AS(MlpExtractor::load(dir / "bad.json"), DataError);
    CHECK_THROWS_AS(MlpExtractor::load(dir / "missing.json"), DataError);
    CHECK_THROWS_AS(make_extractor("inception"), UsageError);
}

TEST_CASE("feature sidecar roundtrip is bit exact and keyed") {
    const auto dir = temp_dir("sidecar");
    const ReferenceExtractor ex;
    const Eigen::MatrixXd f = extract_features(corpus(4, 7), ex);
    const FeatureCacheKey key{"0123456789abcdef0123456789abcdef", ex.name()};
    const auto path = feature_sidecar_path(dir, key);
    CHECK_FALSE(read_feature_sidecar(path, key).has_value());
    write_feature_sidecar(path, key, f);
    const auto back = read_feature_sidecar(path, key);
    REQUIRE(back.has_value());
    CHECK(*back == f);
    CHECK_FALSE(read_feature_sidecar(path, FeatureCacheKey{"ffff", ex.name()}).has_value());

    std::ofstream(dir / "junk.feat") << "not a sidecar";
    CHECK_THROWS_AS(read_feature_sidecar(dir / "junk.feat", key), DataError);
}

TEST_CASE("constant tiles of different colours give different features") {
    const ReferenceExtractor ex;
    const std::vector<ImageTile> tiles{ImageTile::filled(32, 32, {200, 80, 120}),
                                       ImageTile::filled(32, 32, {90, 100, 210})};
    const Eigen::MatrixXd f = extract_features(tiles, ex);
    CHECK((f.row(0) - f.row(1)).norm() > 0.1);
}

TEST_CASE("fid grows as a set is progressively replaced by noise tiles") {
    const ReferenceExtractor ex;
    const auto reference = corpus(48, 3000);
    const auto base = corpus(48, 4000);
    std::vector<ImageTile> half = base;
    for (std::size_t i = 0; i < half.size(); i += 2) half[i] = testing::random_tile(48, 48, 9000 + i);
    std::vector<ImageTile> full;
    for (std::size_t i = 0; i < base.size(); ++i) full.push_back(testing::random_tile(48, 48, 9000 + i));
    const double f0 = fid(base, reference, ex);
    const double f50 = fid(half, reference, ex);
    const double f100 = fid(full, reference, ex);
    CHECK(f0 < f50);
    CHECK(f50 < f100);
}
