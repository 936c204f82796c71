#include "stainbench/image_io.hpp"

#include "stainbench/error.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <iostream>

namespace stainbench {

ImageTile read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("image not found: " + path.string());
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw DataError("cannot decode image: " + path.string());
    if (raw.depth() != CV_8U) {
        throw DataError("only 8-bit images are supported: " + path.string());
    }

    cv::Mat rgb;
    switch (raw.channels()) {
    case 1: cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
    case 4:
        std::cerr << "warning: dropping alpha channel of " << path.string() << '\n';
        cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB);
        break;
    default:
        throw DataError("unsupported channel count " + std::to_string(raw.channels()) + ": " +
                        path.string());
    }

    std::vector<std::uint8_t> buffer(static_cast<std::size_t>(rgb.rows) * rgb.cols * 3);
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<std::uint8_t>(y);
        std::copy(row, row + static_cast<std::size_t>(rgb.cols) * 3,
                  buffer.begin() + static_cast<std::ptrdiff_t>(y) * rgb.cols * 3);
    }
    return ImageTile(rgb.cols, rgb.rows, std::move(buffer), path.stem().string());
}

void write_image(const std::filesystem::path& path, const ImageTile& tile) {
    cv::Mat rgb(tile.height(), tile.width(), CV_8UC3,
                const_cast<std::uint8_t*>(tile.pixels().data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write image: " + path.string());
}

} // namespace stainbench
