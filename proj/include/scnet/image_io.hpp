#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

namespace scnet {

/// 8-bit 3-channel image in R,G,B channel order. Throws DataError if unreadable.
cv::Mat read_rgb(const std::filesystem::path& path);

/// Single-channel {0,1} mask: pixels >= 128 become 1. Colour files are
/// converted to grey first. Throws DataError if unreadable.
cv::Mat read_binary(const std::filesystem::path& path);

/// Writes an RGB image (channel order converted for the encoder).
void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb);

/// Writes a {0,1} map as a 0/255 single-channel PNG.
void write_binary(const std::filesystem::path& path, const cv::Mat& bits);

/// Writes any Mat as-is (grey, 16-bit, ...). Throws DataError on failure.
void write_image(const std::filesystem::path& path, const cv::Mat& image);

}  // namespace scnet
