#include "scnet/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "scnet/errors.hpp"

namespace scnet {

cv::Mat read_rgb(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot read image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return rgb;
}

cv::Mat read_binary(const std::filesystem::path& path) {
    cv::Mat grey = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (grey.empty()) throw DataError("cannot read mask " + path.string());
    cv::Mat bits;
    cv::threshold(grey, bits, 127, 1, cv::THRESH_BINARY);
    return bits;
}

void write_image(const std::filesystem::path& path, const cv::Mat& image) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), image)) throw DataError("cannot write " + path.string());
}

void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb) {
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    write_image(path, bgr);
}

void write_binary(const std::filesystem::path& path, const cv::Mat& bits) {
    write_image(path, bits * 255);
}

}  // namespace scnet
