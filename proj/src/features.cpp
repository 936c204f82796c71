#include "stainbench/features.hpp"

#include "stainbench/color.hpp"
#include "stainbench/error.hpp"
#include "stainbench/numeric.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>

namespace stainbench {

namespace {

// Channel-major (C, H, W) vector of pixel values in [0, 1].
Eigen::VectorXd flatten_planar(const ImageTile& tile) {
    const int w = tile.width(), h = tile.height();
    Eigen::VectorXd v(3 * w * h);
    const auto px = tile.pixels();
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < w * h; ++i) v[c * w * h + i] = px[3 * static_cast<std::size_t>(i) + c] / 255.0;
    }
    return v;
}

ImageTile fit_to_input(const ImageTile& tile, const FeatureExtractor& extractor) {
    if (tile.width() == extractor.input_width() && tile.height() == extractor.input_height()) return tile;
    return resize_bicubic(tile, extractor.input_width(), extractor.input_height());
}

Eigen::VectorXd checked_row(const ImageTile& tile, const FeatureExtractor& extractor) {
    Eigen::VectorXd row = extractor.extract(fit_to_input(tile, extractor));
    if (row.size() != extractor.dimension()) {
        throw DataError("extractor " + extractor.name() + " returned " + std::to_string(row.size()) +
                        " features, declared " + std::to_string(extractor.dimension()));
    }
    if (!row.allFinite()) throw NumericalError("non-finite features");
    return row;
}

} // namespace

ReferenceExtractor::ReferenceExtractor(std::uint64_t seed) : seed_(seed) {
    constexpr int inputs = 3 * kInputSize * kInputSize;
    Rng rng(seed);
    projection_.resize(kDimension, inputs);
    for (int r = 0; r < kDimension; ++r) {
        for (int c = 0; c < inputs; ++c) projection_(r, c) = rng.normal() * (4.0 / std::sqrt(double(inputs)));
    }
    bias_.resize(kDimension);
    for (int r = 0; r < kDimension; ++r) bias_[r] = 0.1 * rng.normal();
}

std::string ReferenceExtractor::name() const {
    return "reference-rp64-s" + std::to_string(seed_);
}

Eigen::VectorXd ReferenceExtractor::extract(const ImageTile& tile) const {
    const Eigen::VectorXd centered = flatten_planar(tile).array() - 0.5;
    return (projection_ * centered + bias_).array().tanh();
}

MlpExtractor MlpExtractor::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open extractor model: " + path.string());
    MlpExtractor m;
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.at("format").get<std::string>() != "stainbench.mlp" || doc.at("version").get<int>() != 1) {
            throw DataError("unsupported extractor model format: " + path.string());
        }
        m.name_ = doc.value("name", path.stem().string());
        m.width_ = doc.at("input_width").get<int>();
        m.height_ = doc.at("input_height").get<int>();
        if (doc.contains("input_mean")) m.mean_ = doc.at("input_mean").get<std::array<double, 3>>();
        if (doc.contains("input_std")) m.std_ = doc.at("input_std").get<std::array<double, 3>>();
        Eigen::Index expected = 3 * static_cast<Eigen::Index>(m.width_) * m.height_;
        for (const auto& layer : doc.at("layers")) {
            const auto rows = layer.at("weights").get<std::vector<std::vector<double>>>();
            const auto bias = layer.at("bias").get<std::vector<double>>();
            Layer l;
            l.weights.resize(static_cast<Eigen::Index>(rows.size()), expected);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (static_cast<Eigen::Index>(rows[r].size()) != expected) {
                    throw DataError("extractor layer width mismatch in " + path.string());
                }
                for (Eigen::Index c = 0; c < expected; ++c) l.weights(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
            }
            if (bias.size() != rows.size()) throw DataError("extractor bias size mismatch in " + path.string());
            l.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
            const auto act = layer.value("activation", std::string("linear"));
            if (act == "relu") l.activation = Activation::Relu;
            else if (act == "tanh") l.activation = Activation::Tanh;
            else if (act == "linear") l.activation = Activation::Linear;
            else throw DataError("unknown activation '" + act + "' in " + path.string());
            expected = l.weights.rows();
            m.layers_.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed extractor model " + path.string() + ": " + e.what());
    }
    if (m.width_ <= 0 || m.height_ <= 0 || m.layers_.empty()) {
        throw DataError("extractor model needs a positive input size and at least one layer");
    }
    return m;
}

int MlpExtractor::dimension() const {
    return static_cast<int>(layers_.back().weights.rows());
}

Eigen::VectorXd MlpExtractor::extract(const ImageTile& tile) const {
    Eigen::VectorXd v = flatten_planar(tile);
    const Eigen::Index plane = static_cast<Eigen::Index>(width_) * height_;
    for (int c = 0; c < 3; ++c) {
        v.segment(c * plane, plane) = (v.segment(c * plane, plane).array() - mean_[c]) / std_[c];
    }
    for (const Layer& l : layers_) {
        v = l.weights * v + l.bias;
        switch (l.activation) {
        case Activation::Relu: v = v.cwiseMax(0.0); break;
        case Activation::Tanh: v = v.array().tanh(); break;
        case Activation::Linear: break;
        }
    }
    return v;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec) {
    if (spec.empty() || spec == "builtin") return std::make_unique<ReferenceExtractor>();
    if (spec.rfind("mlp:", 0) == 0) return std::make_unique<MlpExtractor>(MlpExtractor::load(spec.substr(4)));
    throw UsageError("unknown extractor '" + spec + "' (expected builtin or mlp:<path>)");
}

Eigen::MatrixXd extract_features(std::span<const ImageTile> tiles, const FeatureExtractor& extractor) {
    const auto n = static_cast<std::ptrdiff_t>(tiles.size());
    Eigen::MatrixXd out(n, extractor.dimension());
    std::vector<std::optional<std::string>> failures(tiles.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out.row(i) = checked_row(tiles[i], extractor).transpose();
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (failures[i]) {
            throw DataError("feature extraction failed for tile '" + tiles[i].id() + "': " + *failures[i]);
        }
    }
    return out;
}

double fid_from_features(const Eigen::MatrixXd& generated, const Eigen::MatrixXd& target) {
    return frechet_distance(fit_feature_gaussian(generated), fit_feature_gaussian(target));
}

double fid(std::span<const ImageTile> generated, std::span<const ImageTile> target,
           const FeatureExtractor& extractor) {
    if (generated.size() < 2 || target.size() < 2) throw DataError("FID needs at least two tiles per set");
    return fid_from_features(extract_features(generated, extractor), extract_features(target, extractor));
}

namespace {

constexpr char kSidecarMagic[8] = {'S', 'B', 'F', 'E', 'A', 'T', '0', '1'};
constexpr std::uint32_t kSidecarVersion = 1;
static_assert(std::endian::native == std::endian::little, "feature sidecars assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError("truncated feature sidecar");
    return value;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto len = get<std::uint32_t>(in);
    if (len > (1u << 20)) throw DataError("corrupt feature sidecar");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("truncated feature sidecar");
    return s;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

} // namespace

std::filesystem::path feature_sidecar_path(const std::filesystem::path& dir, const FeatureCacheKey& key) {
    return dir / (key.manifest_hash.substr(0, 16) + "." + sanitize(key.extractor_name) + ".feat");
}

void write_feature_sidecar(const std::filesystem::path& path, const FeatureCacheKey& key,
                           const Eigen::MatrixXd& features) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write feature sidecar: " + path.string());
    out.write(kSidecarMagic, sizeof(kSidecarMagic));
    put<std::uint32_t>(out, kSidecarVersion);
    put_string(out, key.manifest_hash);
    put_string(out, key.extractor_name);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(features.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(features.cols()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(features(r, c)));
        }
    }
}

std::optional<Eigen::MatrixXd> read_feature_sidecar(const std::filesystem::path& path,
                                                    const FeatureCacheKey& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSidecarMagic, sizeof(magic)) != 0) {
        throw DataError("not a feature sidecar: " + path.string());
    }
    if (get<std::uint32_t>(in) != kSidecarVersion) throw DataError("unsupported feature sidecar version");
    const std::string hash = get_string(in);
    const std::string name = get_string(in);
    if (hash != key.manifest_hash || name != key.extractor_name) return std::nullopt;
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1ull << 32) || cols > (1ull << 20)) throw DataError("corrupt feature sidecar");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = std::bit_cast<double>(get<std::uint64_t>(in));
    }
    return out;
}

namespace serial {

Eigen::MatrixXd extract_features(std::span<const ImageTile> tiles, const FeatureExtractor& extractor) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(tiles.size()), extractor.dimension());
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = checked_row(tiles[i], extractor).transpose();
    }
    return out;
}

} // namespace serial

} // namespace stainbench
