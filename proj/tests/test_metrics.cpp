#include "doctest.h"

#include "stainbench/color.hpp"
#include "stainbench/error.hpp"
#include "stainbench/metrics.hpp"
#include "stainbench/numeric.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <numbers>

using namespace stainbench;

namespace {

GrayImage pattern_image(int w, int h, int variant) {
    GrayImage g{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const int v = variant == 0 ? (i * 7 + j * 13) % 256 : (i * i + 3 * j + 5 * (i * j % 7)) % 256;
            g.pixels[static_cast<std::size_t>(i) * w + j] = static_cast<std::uint8_t>(v);
        }
    }
    return g;
}

GrayImage random_gray(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage g{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    for (auto& p : g.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return g;
}

GrayImage invert(GrayImage g) {
    for (auto& p : g.pixels) p = static_cast<std::uint8_t>(255 - p);
    return g;
}

Eigen::MatrixXd gaussian_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double shift = 0.0,
                              double scale = 1.0) {
    Rng rng(seed);
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = shift + scale * rng.normal();
    }
    return m;
}

LabImage lab_samples(const std::vector<double>& a, const std::vector<double>& b) {
    LabImage img{static_cast<int>(a.size()), 1, {}};
    for (std::size_t i = 0; i < a.size(); ++i) img.pixels.push_back({50.0, a[i], b[i]});
    return img;
}

} // namespace

TEST_CASE("ssim matches a frozen skimage value on a fixed pattern") {
    // skimage.metrics.structural_similarity(x, y, win_size=7, data_range=255)
    const double r = ssim(pattern_image(24, 20, 0), pattern_image(24, 20, 1)).mean_ssim;
    CHECK(r == doctest::Approx(0.12475268766085185).epsilon(1e-10));
}

TEST_CASE("ssim agrees with per-window brute force") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const GrayImage x = random_gray(31, 17, seed);
        GrayImage y = x;
        Rng rng(seed + 100);
        for (auto& p : y.pixels) p = static_cast<std::uint8_t>(std::clamp<int>(p + int(rng.below(41)) - 20, 0, 255));
        for (int win : {3, 7}) {
            CHECK(std::abs(ssim(x, y, win).mean_ssim - oracle::ssim_direct(x, y, win)) < 1e-6);
        }
    }
}

TEST_CASE("ssim properties") {
    const GrayImage x = random_gray(40, 32, 9);
    const GrayImage y = random_gray(40, 32, 10);
    CHECK(ssim(x, x).mean_ssim == 1.0);
    CHECK(ssim(x, y).mean_ssim == ssim(y, x).mean_ssim);
    CHECK(ssim(x, y).mean_ssim <= 1.0);
    CHECK(ssim(x, y).mean_ssim >= -1.0);
    const GrayImage smooth = pattern_image(40, 32, 0);
    CHECK(ssim(smooth, invert(smooth)).mean_ssim < 0.5);

    const auto full = ssim(x, y, 7, 255.0, true);
    CHECK(full.map_width == 34);
    CHECK(full.map_height == 26);
    REQUIRE(full.map.size() == 34u * 26u);
    double total = 0.0;
    for (double v : full.map) total += v;
    CHECK(total / full.map.size() == doctest::Approx(full.mean_ssim).epsilon(1e-12));
}

TEST_CASE("ssim input validation") {
    CHECK_THROWS_AS(ssim(random_gray(10, 10, 1), random_gray(10, 11, 1)), DataError);
    CHECK_THROWS_AS(ssim(random_gray(6, 6, 1), random_gray(6, 6, 2)), DataError);
    CHECK_THROWS_AS(ssim(random_gray(10, 10, 1), random_gray(10, 10, 2), 1), UsageError);
}

TEST_CASE("mean with standard error") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto m = mean_with_stderr(v);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(m.n == 4);
    const std::vector<double> one{7.0};
    CHECK(mean_with_stderr(one).standard_error == 0.0);
}

TEST_CASE("wasserstein_1d matches scipy on a small case") {
    // scipy.stats.wasserstein_distance([0.1, 0.5, 0.5, 2.0, 3.25], [1.0, 1.5, -0.75])
    const double d = wasserstein_1d(EmpiricalDistribution({0.1, 0.5, 0.5, 2.0, 3.25}),
                                    EmpiricalDistribution({1.0, 1.5, -0.75}));
    CHECK(d == doctest::Approx(0.9533333333333334).epsilon(1e-12));
}

TEST_CASE("wasserstein_1d agrees with a grid integration on lattice samples") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> a, b;
        for (int i = 0; i < 37 + trial; ++i) a.push_back(0.25 * static_cast<double>(rng.below(60)));
        for (int i = 0; i < 23 + 2 * trial; ++i) b.push_back(0.25 * static_cast<double>(rng.below(80)));
        const double want = oracle::wasserstein_grid(a, b, 0.25);
        CHECK(std::abs(wasserstein_1d(EmpiricalDistribution(a), EmpiricalDistribution(b)) - want) < 1e-9);
    }
}

TEST_CASE("wasserstein_1d metric properties") {
    Rng rng(6);
    std::vector<double> a(50), b(70), c(40);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal() + 0.5;
    for (auto& v : c) v = 2.0 * rng.uniform();
    const EmpiricalDistribution da(a), db(b), dc(c);
    CHECK(wasserstein_1d(da, da) == 0.0);
    CHECK(wasserstein_1d(da, db) == doctest::Approx(wasserstein_1d(db, da)).epsilon(1e-12));
    CHECK(wasserstein_1d(da, dc) <= wasserstein_1d(da, db) + wasserstein_1d(db, dc) + 1e-12);

    std::vector<double> shifted = a;
    for (auto& v : shifted) v += 1.75;
    CHECK(wasserstein_1d(da, EmpiricalDistribution(shifted)) == doctest::Approx(1.75).epsilon(1e-12));
    CHECK_THROWS_AS(EmpiricalDistribution({}), DataError);
}

TEST_CASE("wd_color normalises chroma and averages the two channels") {
    Rng rng(8);
    std::vector<double> a(300), b(300);
    for (auto& v : a) v = rng.uniform(-40.0, 40.0);
    for (auto& v : b) v = rng.uniform(-40.0, 40.0);
    std::vector<double> a_shift = a;
    for (auto& v : a_shift) v += 12.0;
    const std::vector<LabImage> gen{lab_samples(a, b)};
    const std::vector<LabImage> tgt{lab_samples(a_shift, b)};
    CHECK(wd_color_lab(gen, tgt) == doctest::Approx(12.0 / 255.0 / 2.0).epsilon(1e-12));
    CHECK(wd_color_lab(gen, gen) == 0.0);
    CHECK(normalize_chroma(-128.0) == 0.0);
    CHECK(normalize_chroma(127.0) == 1.0);
}

TEST_CASE("wd_color sample cap strides through the pool") {
    const auto tile = testing::random_tile(32, 32, 4);
    const std::vector<ImageTile> g{tile}, t{testing::random_tile(32, 32, 5)};
    const double full = wd_color(g, t);
    const double capped = wd_color(g, t, WdOptions{256});
    CHECK(full > 0.0);
    CHECK(capped > 0.0);
    CHECK(wd_color(g, g, WdOptions{100}) == 0.0);
    const std::vector<ImageTile> none;
    CHECK_THROWS_AS(wd_color(none, t), DataError);
}

TEST_CASE("gaussian fit matches a two-pass oracle") {
    const Eigen::MatrixXd f = gaussian_rows(200, 6, 11, 3.0, 2.0);
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    oracle::mean_cov_two_pass(f, mean, cov);
    const auto g = fit_feature_gaussian(f);
    CHECK((g.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.covariance - cov).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(g.covariance == g.covariance.transpose());
    CHECK(g.sample_count == 200);
    CHECK_THROWS_AS(fit_feature_gaussian(Eigen::MatrixXd::Zero(1, 3)), DataError);
}

TEST_CASE("sqrtm_psd") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 4.0, 9.0, 0.25;
    CHECK((sqrtm_psd(d) - Eigen::Vector3d(2.0, 3.0, 0.5).asDiagonal().toDenseMatrix()).norm() < 1e-12);

    const Eigen::MatrixXd a = gaussian_rows(5, 5, 12);
    const Eigen::MatrixXd spd = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::MatrixXd root = sqrtm_psd(spd);
    CHECK((root * root - spd).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((root - root.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(2, 2);
    neg.diagonal() << 1.0, -1e-14;
    CHECK(sqrtm_psd(neg)(1, 1) == 0.0);

    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(sqrtm_psd(asym), NumericalError);
}

TEST_CASE("frechet distance closed forms") {
    FeatureGaussian g1{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0), 10};
    FeatureGaussian g2{Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 1.0), 10};
    // (1 - 3)^2 + (2 - 1)^2
    CHECK(frechet_distance(g1, g2) == doctest::Approx(5.0).epsilon(1e-12));

    Eigen::VectorXd mu1(4), mu2(4), v1(4), v2(4);
    mu1 << 0.0, 1.0, -2.0, 0.5;
    mu2 << 0.3, 1.0, 2.0, -0.5;
    v1 << 1.0, 2.0, 0.5, 3.0;
    v2 << 0.25, 2.0, 4.0, 1.0;
    FeatureGaussian d1{mu1, v1.asDiagonal().toDenseMatrix(), 10};
    FeatureGaussian d2{mu2, v2.asDiagonal().toDenseMatrix(), 10};
    CHECK(frechet_distance(d1, d2) == doctest::Approx(oracle::frechet_diagonal(mu1, v1, mu2, v2)).epsilon(1e-10));
    CHECK(frechet_distance(d1, d1) == doctest::Approx(0.0).epsilon(1e-12));

    FeatureGaussian wrong{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 10};
    CHECK_THROWS_AS(frechet_distance(d1, wrong), DataError);
}

TEST_CASE("frechet distance is invariant under a shared rotation") {
    const Eigen::MatrixXd f1 = gaussian_rows(300, 5, 21);
    const Eigen::MatrixXd f2 = gaussian_rows(300, 5, 22, 0.4, 1.5);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_rows(5, 5, 23));
    const Eigen::MatrixXd q = qr.householderQ();
    const double before = frechet_distance(fit_feature_gaussian(f1), fit_feature_gaussian(f2));
    const double after = frechet_distance(fit_feature_gaussian(f1 * q), fit_feature_gaussian(f2 * q));
    CHECK(after == doctest::Approx(before).epsilon(1e-9));
    CHECK(before > 0.0);
    CHECK(frechet_distance(fit_feature_gaussian(f1), fit_feature_gaussian(f2)) ==
          doctest::Approx(frechet_distance(fit_feature_gaussian(f2), fit_feature_gaussian(f1))).epsilon(1e-9));
}

TEST_CASE("serial ssim is bitwise identical to the table version") {
    const GrayImage x = random_gray(50, 45, 31), y = random_gray(50, 45, 32);
    const auto a = ssim(x, y, 7, 255.0, true);
    const auto b = serial::ssim(x, y, 7, 255.0, true);
    CHECK(a.mean_ssim == b.mean_ssim);
    CHECK(a.map == b.map);
}

TEST_CASE("small closed-form metric cases") {
    CHECK(wasserstein_1d(EmpiricalDistribution({0.0}), EmpiricalDistribution({-3.5})) == 3.5);

    Eigen::MatrixXd two(2, 2);
    two << 0.0, 0.0, 2.0, 0.0;
    const auto g = fit_feature_gaussian(two);
    CHECK(g.mean == Eigen::Vector2d(1.0, 0.0));
    CHECK(g.covariance(0, 0) == 2.0);
    CHECK(g.covariance(0, 1) == 0.0);
    CHECK(g.covariance(1, 1) == 0.0);

    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 0.7);
    CHECK(fit_feature_gaussian(same).covariance.isZero(0.0));

    CHECK(sqrtm_psd(Eigen::MatrixXd::Identity(4, 4)) == Eigen::MatrixXd::Identity(4, 4));
}

TEST_CASE("feature covariance is numerically PSD and sqrtm recovers AtA") {
    for (std::uint64_t seed = 40; seed < 45; ++seed) {
        const Eigen::MatrixXd f = gaussian_rows(30, 12, seed);
        const auto g = fit_feature_gaussian(f);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.covariance);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);

        const Eigen::MatrixXd a = gaussian_rows(6, 9, seed + 50);
        const Eigen::MatrixXd psd = a.transpose() * a;  // rank 6 in 9 dimensions
        const Eigen::MatrixXd r = sqrtm_psd(psd);
        CHECK((r * r - psd).norm() / psd.norm() < 1e-6);
    }
}
