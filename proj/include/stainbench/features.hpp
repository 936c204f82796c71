#pragma once

#include "stainbench/image.hpp"
#include "stainbench/metrics.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stainbench {

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    virtual std::string name() const = 0;
    virtual int dimension() const = 0;
    virtual int input_width() const = 0;
    virtual int input_height() const = 0;
    virtual bool deterministic() const { return true; }

    // `tile` is already resized to input_width() x input_height().
    virtual Eigen::VectorXd extract(const ImageTile& tile) const = 0;
};

// Deterministic stand-in for a deep network: bicubic downsample to 16x16, then
// a fixed-seed Gaussian random projection to 64 dimensions followed by tanh.
class ReferenceExtractor final : public FeatureExtractor {
public:
    static constexpr int kDimension = 64;
    static constexpr int kInputSize = 16;

    explicit ReferenceExtractor(std::uint64_t seed = 20240101);

    std::string name() const override;
    int dimension() const override { return kDimension; }
    int input_width() const override { return kInputSize; }
    int input_height() const override { return kInputSize; }
    Eigen::VectorXd extract(const ImageTile& tile) const override;

private:
    std::uint64_t seed_;
    Eigen::MatrixXd projection_;
    Eigen::VectorXd bias_;
};

// Dense feed-forward network read from a JSON model file:
//
//   {"format": "stainbench.mlp", "version": 1, "name": "...",
//    "input_width": W, "input_height": H,
//    "input_mean": [r, g, b], "input_std": [r, g, b],
//    "layers": [{"weights": [[...], ...], "bias": [...], "activation": "relu"}]}
//
// Pixels are scaled to [0, 1], standardised per channel and flattened
// channel-major (C, H, W). Activations: relu, tanh, linear.
class MlpExtractor final : public FeatureExtractor {
public:
    static MlpExtractor load(const std::filesystem::path& path);

    std::string name() const override { return name_; }
    int dimension() const override;
    int input_width() const override { return width_; }
    int input_height() const override { return height_; }
    Eigen::VectorXd extract(const ImageTile& tile) const override;

private:
    enum class Activation { Relu, Tanh, Linear };
    struct Layer {
        Eigen::MatrixXd weights;
        Eigen::VectorXd bias;
        Activation activation;
    };

    std::string name_;
    int width_ = 0;
    int height_ = 0;
    std::array<double, 3> mean_{};
    std::array<double, 3> std_{1.0, 1.0, 1.0};
    std::vector<Layer> layers_;
};

// "builtin" or "mlp:<path>".
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec);

// One feature row per tile, in input order.
Eigen::MatrixXd extract_features(std::span<const ImageTile> tiles, const FeatureExtractor& extractor);

double fid(std::span<const ImageTile> generated, std::span<const ImageTile> target,
           const FeatureExtractor& extractor);
double fid_from_features(const Eigen::MatrixXd& generated, const Eigen::MatrixXd& target);

// Binary feature sidecar, little-endian:
//   "SBFEAT01" | u32 version | u32 len + manifest hash | u32 len + extractor name
//   | u64 rows | u64 cols | rows * cols float64, row-major
struct FeatureCacheKey {
    std::string manifest_hash;
    std::string extractor_name;
};

std::filesystem::path feature_sidecar_path(const std::filesystem::path& dir, const FeatureCacheKey& key);
void write_feature_sidecar(const std::filesystem::path& path, const FeatureCacheKey& key,
                           const Eigen::MatrixXd& features);
// nullopt when the file is missing or was written for a different key.
std::optional<Eigen::MatrixXd> read_feature_sidecar(const std::filesystem::path& path,
                                                    const FeatureCacheKey& key);

namespace serial {

Eigen::MatrixXd extract_features(std::span<const ImageTile> tiles, const FeatureExtractor& extractor);

} // namespace serial

} // namespace stainbench
