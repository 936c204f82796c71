#include "doctest.h"

#include "stainbench/color.hpp"
#include "stainbench/datapipe.hpp"
#include "stainbench/image_io.hpp"
#include "stainbench/profile_io.hpp"
#include "stainbench/report.hpp"
#include "support/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stainbench;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Workspace {
public:
    explicit Workspace(const std::string& name) : dir_(fs::temp_directory_path() / ("stainbench_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    const fs::path& dir() const { return dir_; }
    fs::path operator/(const std::string& p) const { return dir_ / p; }

    Run run(const std::string& args, const std::string& env = "") const {
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" STAINBENCH_BIN "' " + args +
                                " > stdout.txt 2> stderr.txt";
        const int raw = std::system(cmd.c_str());
        return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(dir_ / "stdout.txt"), slurp(dir_ / "stderr.txt")};
    }

private:
    fs::path dir_;
};

void write_slide(const fs::path& path, const StainMatrix& m, std::uint64_t seed, int size = 512) {
    write_image(path, testing::stained_tile(size, size, m, seed));
}

nlohmann::json error_line(const Run& r) {
    std::istringstream lines(r.err);
    std::string line, last;
    while (std::getline(lines, line)) {
        if (!line.empty()) last = line;
    }
    return nlohmann::json::parse(last);
}

double mean_abs_deviation(const ImageTile& a, const ImageTile& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.pixels().size(); ++i) total += std::abs(int(a.pixels()[i]) - int(b.pixels()[i]));
    return total / static_cast<double>(a.pixels().size());
}

} // namespace

TEST_CASE("tile writes four tiles and a reproducible manifest") {
    Workspace ws("tile");
    write_slide(ws / "img.png", testing::planted_he_matrix(), 1);
    const Run a = ws.run("tile --input img.png --size 256 --min-tissue 0 --out tiles");
    REQUIRE(a.status == 0);
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(ws / "tiles")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 4);
    const Manifest m = load_manifest(ws / "tiles/manifest.jsonl");
    CHECK(m.size() == 4);
    CHECK_NOTHROW(m.check_paths());

    const Run b = ws.run("tile --input img.png --size 256 --min-tissue 0 --out tiles");
    REQUIRE(b.status == 0);
    CHECK(load_manifest(ws / "tiles/manifest.jsonl").hash() == m.hash());
}

TEST_CASE("tile reports a missing input with its path") {
    Workspace ws("tile_missing");
    const Run r = ws.run("tile --input nowhere.png --out tiles");
    CHECK(r.status != 0);
    CHECK(r.err.find("nowhere.png") != std::string::npos);
    CHECK(error_line(r).at("error").at("code") == r.status);
}

TEST_CASE("fit writes valid profiles and rejects an empty corpus") {
    Workspace ws("fit");
    write_slide(ws / "mt.png", testing::planted_mt_matrix(), 2);
    REQUIRE(ws.run("tile --input mt.png --label MT --size 128 --out mt").status == 0);

    REQUIRE(ws.run("fit --method macenko --manifest mt/manifest.jsonl --label MT --out mt.profile.json").status == 0);
    const auto sp = std::get<StainProfile>(load_profile(ws / "mt.profile.json"));
    for (int j = 0; j < 2; ++j) CHECK(std::abs(sp.stain_matrix.col(j).norm() - 1.0) < 1e-9);
    CHECK(sp.fit.stain_label == "MT");
    CHECK(sp.fit.corpus_size == 16);

    REQUIRE(ws.run("fit --method colorstat --manifest mt/manifest.jsonl --out cs.profile.json").status == 0);
    CHECK(std::holds_alternative<ColorStatProfile>(load_profile(ws / "cs.profile.json")));

    const Run empty = ws.run("fit --method macenko --manifest mt/manifest.jsonl --label HE --out none.json");
    CHECK(empty.status == 2);
    CHECK(error_line(empty).at("error").at("kind") == "data");
    CHECK_FALSE(fs::exists(ws / "none.json"));
}

TEST_CASE("transfer is near identity on its own profile and flags degenerate tiles") {
    Workspace ws("transfer");
    fs::create_directories(ws / "in");
    const auto tile = testing::stained_tile(128, 128, testing::planted_he_matrix(), 7);
    write_image(ws / "in/t0.png", tile);
    write_image(ws / "in/blank.png", ImageTile::filled(128, 128, {255, 255, 255}));
    save_manifest(ws / "in/self.jsonl", Manifest({{"t0.png", "t0", "HE", Split::Train, "s", std::nullopt}}));
    save_manifest(ws / "in/batch.jsonl", Manifest({{"t0.png", "t0", "HE", Split::Val, "s", std::nullopt},
                                                   {"blank.png", "blank", "HE", Split::Val, "s", std::nullopt}}));

    REQUIRE(ws.run("fit --method macenko --manifest in/self.jsonl --out self.json").status == 0);
    const Run r = ws.run("transfer --profile self.json --manifest in/batch.jsonl --out gen");
    REQUIRE(r.status == 0);
    const Manifest out = load_manifest(ws / "gen/manifest.jsonl");
    REQUIRE(out.size() == 2);
    CHECK_FALSE(out.records()[0].flag.has_value());
    CHECK(out.records()[1].flag == std::optional<std::string>("passthrough:InsufficientTissue"));

    const auto tiles = load_tiles(out);
    CHECK(mean_abs_deviation(tiles[0], tile) <= 3.0);
    CHECK(tiles[1].pixels()[0] == 255);

    const auto timing = nlohmann::json::parse(slurp(ws / "gen/timing.json"));
    CHECK(timing.at("tiles") == 2);
    CHECK(timing.at("mean_seconds_per_tile").get<double>() > 0.0);
}

TEST_CASE("evaluate identities, symmetry and id mismatch") {
    Workspace ws("evaluate");
    write_slide(ws / "a.png", testing::planted_he_matrix(), 11);
    write_slide(ws / "b.png", testing::planted_mt_matrix(), 12);
    REQUIRE(ws.run("tile --input a.png --size 128 --min-tissue 0 --out a").status == 0);
    REQUIRE(ws.run("tile --input b.png --label MT --size 128 --min-tissue 0 --out b").status == 0);

    REQUIRE(ws.run("evaluate --source a/manifest.jsonl --generated a/manifest.jsonl --target a/manifest.jsonl "
                   "--method-name Same --direction he2mt --out same.json").status == 0);
    const auto same = load_report(ws / "same.json");
    REQUIRE(same.rows.size() == 1);
    CHECK(same.rows[0].fid < 1e-6);
    CHECK(same.rows[0].wd == 0.0);
    CHECK(same.rows[0].ssim_mean == 1.0);
    CHECK(same.rows[0].n_pairs == 16);

    // Swapping which set plays generated and target leaves FID unchanged.
    REQUIRE(ws.run("evaluate --source a/manifest.jsonl --generated a/manifest.jsonl --target b/manifest.jsonl "
                   "--method-name X --direction he2mt --out ab.json").status == 0);
    REQUIRE(ws.run("evaluate --source b/manifest.jsonl --generated b/manifest.jsonl --target a/manifest.jsonl "
                   "--method-name X --direction he2mt --out ba.json").status == 0);
    CHECK(load_report(ws / "ab.json").rows[0].fid ==
          doctest::Approx(load_report(ws / "ba.json").rows[0].fid).epsilon(1e-9));

    const Run mismatch = ws.run("evaluate --source a/manifest.jsonl --generated b/manifest.jsonl "
                                "--target b/manifest.jsonl --method-name X --direction he2mt --out bad.json");
    CHECK(mismatch.status == 2);
    const std::string message = error_line(mismatch).at("error").at("message");
    CHECK(message.find("32 id mismatch") != std::string::npos);
    CHECK(message.find("b_x0_y0") != std::string::npos);
}

TEST_CASE("evaluate appends directions and report renders averaged and per-direction tables") {
    Workspace ws("report");
    write_slide(ws / "he.png", testing::planted_he_matrix(), 21);
    write_slide(ws / "mt.png", testing::planted_mt_matrix(), 22);
    REQUIRE(ws.run("tile --input he.png --size 128 --min-tissue 0 --out he").status == 0);
    REQUIRE(ws.run("tile --input mt.png --label MT --size 128 --min-tissue 0 --out mt").status == 0);
    REQUIRE(ws.run("fit --method colorstat --manifest mt/manifest.jsonl --out mt.json").status == 0);
    REQUIRE(ws.run("fit --method colorstat --manifest he/manifest.jsonl --out he.json").status == 0);
    REQUIRE(ws.run("transfer --profile mt.json --manifest he/manifest.jsonl --out g_mt").status == 0);
    REQUIRE(ws.run("transfer --profile he.json --manifest mt/manifest.jsonl --out g_he").status == 0);
    REQUIRE(ws.run("evaluate --source he/manifest.jsonl --generated g_mt/manifest.jsonl --target mt/manifest.jsonl "
                   "--method-name ColorStat --direction he2mt --out r.json").status == 0);
    REQUIRE(ws.run("evaluate --source mt/manifest.jsonl --generated g_he/manifest.jsonl --target he/manifest.jsonl "
                   "--method-name ColorStat --direction mt2he --out r.json --append").status == 0);
    const auto rep = load_report(ws / "r.json");
    CHECK(rep.rows.size() == 3);
    CHECK_NOTHROW(rep.check_averages());

    REQUIRE(ws.run("report --input r.json --csv r.csv --markdown r.md").status == 0);
    CHECK(slurp(ws / "r.md").find("WD (×10⁻⁴)") != std::string::npos);
    CHECK(slurp(ws / "r.csv").find("ColorStat,averaged,val,") != std::string::npos);
    REQUIRE(ws.run("report --input r.json --per-direction").status == 0);
    const std::string per = slurp(ws / "stdout.txt");
    CHECK(per.find("| ColorStat | HE->MT |") != std::string::npos);
    CHECK(per.find("| ColorStat | MT->HE |") != std::string::npos);
}

TEST_CASE("blindmix builds, reproduces and scores sheets") {
    Workspace ws("blind");
    fs::create_directories(ws / "real");
    fs::create_directories(ws / "fake");
    std::vector<ManifestRecord> real, fake;
    for (int i = 0; i < 6; ++i) {
        real.push_back({"r" + std::to_string(i) + ".png", "r" + std::to_string(i), "MT", Split::Test, "", std::nullopt});
        fake.push_back({"f" + std::to_string(i) + ".png", "f" + std::to_string(i), "MT", Split::Test, "", std::nullopt});
    }
    save_manifest(ws / "real/m.jsonl", Manifest(real));
    save_manifest(ws / "fake/m.jsonl", Manifest(fake));

    const std::string args = "blindmix --real real/m.jsonl --artificial fake/m.jsonl --n-each 5 --seed 9 ";
    REQUIRE(ws.run(args + "--sheet s1.csv --key k1.csv").status == 0);
    REQUIRE(ws.run(args + "--sheet s2.csv --key k2.csv").status == 0);
    CHECK(slurp(ws / "s1.csv") == slurp(ws / "s2.csv"));
    CHECK(slurp(ws / "k1.csv") == slurp(ws / "k2.csv"));
    std::size_t lines = 0;
    for (char c : slurp(ws / "s1.csv")) lines += c == '\n';
    CHECK(lines == 11);

    const Run score = ws.run("blindmix --key k1.csv --score k1.csv");
    REQUIRE(score.status == 0);
    CHECK(score.out.find("accuracy 1.000000") != std::string::npos);

    const Run too_many = ws.run("blindmix --real real/m.jsonl --artificial fake/m.jsonl --n-each 200 --sheet s.csv --key k.csv");
    CHECK(too_many.status == 2);
}

TEST_CASE("exit codes and configuration") {
    Workspace ws("codes");
    CHECK(ws.run("frobnicate").status == 1);
    CHECK(ws.run("fit --manifest x.jsonl").status == 1);

    write_slide(ws / "img.png", testing::planted_he_matrix(), 3, 256);
    REQUIRE(ws.run("tile --input img.png --size 128 --min-tissue 0 --out t").status == 0);
    const Run bad_method = ws.run("fit --method reinhard --manifest t/manifest.jsonl --out p.json");
    CHECK(bad_method.status == 1);
    CHECK(error_line(bad_method).at("error").at("kind") == "usage");

    std::ofstream(ws / "cfg.json") << R"({"method": "vahadane", "stain": {"vahadane": {"max_iters": 5}}})";
    REQUIRE(ws.run("--config cfg.json fit --manifest t/manifest.jsonl --out v.json").status == 0);
    const auto v = std::get<StainProfile>(load_profile(ws / "v.json"));
    CHECK(v.method == StainMethod::Vahadane);
    CHECK(v.params.vahadane.max_iters == 5);
    REQUIRE(ws.run("--config cfg.json fit --method macenko --manifest t/manifest.jsonl --out m.json").status == 0);
    CHECK(std::get<StainProfile>(load_profile(ws / "m.json")).method == StainMethod::Macenko);

    std::ofstream(ws / "typo.json") << R"({"metod": "vahadane"})";
    CHECK(ws.run("--config typo.json fit --manifest t/manifest.jsonl --out x.json").status == 1);

    CHECK(ws.run("report --input nothing.json", "STAINBENCH_WORKERS=abc").status == 1);
    CHECK(ws.run("tile --input img.png --size 128 --min-tissue 0 --out t2", "STAINBENCH_WORKERS=2").status == 0);
}
