#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "scnet/tensor.hpp"

namespace scnet {

enum class EdgeMode { Precomputed, Learned, Classical };

std::string to_string(EdgeMode m);
/// "precomputed", "learned" or "classical".
EdgeMode parse_edge_mode(const std::string& name);

struct PriorConfig {
    EdgeMode mode = EdgeMode::Classical;
    /// Cut-off applied to the learned detector's edge probability.
    double threshold = 0.5;
    /// Caffe deploy prototxt and weights of the learned edge network.
    std::string edge_model;
    std::string edge_weights;
    /// Folder holding <sample-id>.edge.png files (precomputed mode).
    std::string edge_dir;
    /// Hysteresis thresholds of the classical detector (Sobel magnitude).
    double canny_low = 50.0;
    double canny_high = 150.0;

    void validate() const;
    friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

void to_json(nlohmann::json& j, const PriorConfig& c);
void from_json(const nlohmann::json& j, PriorConfig& c);

/// Produces {0,1} edge maps from RGB images. Learned mode loads the network
/// once at construction and throws DataError if its files are missing.
class EdgeDetector {
public:
    explicit EdgeDetector(PriorConfig config);
    ~EdgeDetector();
    EdgeDetector(EdgeDetector&&) noexcept;
    EdgeDetector& operator=(EdgeDetector&&) noexcept;

    /// H x W CV_8U map with values {0,1}. Precomputed mode has no detector
    /// and throws ConfigError; use load_precomputed_edges instead.
    cv::Mat detect(const cv::Mat& rgb);

    [[nodiscard]] const PriorConfig& config() const noexcept { return config_; }

private:
    struct Net;
    PriorConfig config_;
    std::unique_ptr<Net> net_;
};

/// Gradient-magnitude detector with hysteresis (Canny), output in {0,1}.
cv::Mat classical_edges(const cv::Mat& rgb, double low, double high);

std::filesystem::path edge_path_for(const std::filesystem::path& edge_dir,
                                    const std::string& sample_id);

/// Stored 0/255 map returned as {0,1}. Throws DataError if absent.
cv::Mat load_precomputed_edges(const std::filesystem::path& edge_dir, const std::string& sample_id);

/// 8-bit colour value to network scale: v / 127.5 - 1.
constexpr float normalize_pixel(float v) noexcept { return v / 127.5f - 1.0f; }

/// Network input of `channels` (3 or 4) planes: R,G,B scaled by v/127.5 - 1
/// and, for 4 channels, the edge bit mapped to -1/+1. The edge map is ignored
/// for 3 channels. Throws ShapeError on size mismatch or a missing edge map.
FeatureMap assemble_input(const cv::Mat& rgb, const cv::Mat& edges, int channels);

/// Inverse of the colour part of assemble_input, rounded to 8 bits.
cv::Mat rgb_from_input(const FeatureMap& input);

/// Copies a {0,1} CV_8U map into a Mask.
Mask mask_from_mat(const cv::Mat& bits);

}  // namespace scnet
