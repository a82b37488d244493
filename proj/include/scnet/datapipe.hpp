#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

namespace scnet {

struct SampleRecord {
    std::string id;
    std::string image;
    std::string mask;
    /// Empty when the sample has no stored edge map.
    std::string edge;
    std::string tag;
    /// "train", "test" or empty before splitting.
    std::string split;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
    std::vector<SampleRecord> records;
    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] bool empty() const noexcept { return records.empty(); }
    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Where images and masks live below a dataset root. A mask is matched to an
/// image by file stem: images/<id>.<ext> pairs with masks/<id><mask_suffix>.
struct ManifestLayout {
    std::string image_dir = "images";
    std::string mask_dir = "masks";
    /// Optional folder of <id>.edge.png maps.
    std::string edge_dir;
    std::vector<std::string> image_extensions{".png", ".jpg", ".jpeg"};
    std::string mask_suffix = ".png";
    std::string tag;
};

void to_json(nlohmann::json& j, const ManifestLayout& l);
void from_json(const nlohmann::json& j, ManifestLayout& l);

/// Scans `root` for image/mask pairs, sorted by id. Throws DataError for a
/// missing root, images without masks (all listed), and masks whose size
/// differs from their image. An empty image folder gives an empty manifest
/// and a line in `warnings`.
Manifest load_manifest(const std::filesystem::path& root, const ManifestLayout& layout,
                       std::vector<std::string>* warnings = nullptr);

/// Manifest file: JSON array of {id, image, mask, edge, tag, split}. Relative
/// paths are resolved against the file's folder on reading.
Manifest read_manifest_file(const std::filesystem::path& path);
void write_manifest_file(const std::filesystem::path& path, const Manifest& manifest);

/// Seeded shuffle, then the first floor(n * fraction) records form the test
/// split. Throws ConfigError unless 0 < fraction < 1.
std::pair<Manifest, Manifest> split_holdout(const Manifest& manifest, double fraction, std::uint64_t seed);

/// One loaded sample. `mask` and `edges` are CV_8U {0,1}; `edges` may be empty.
struct Sample {
    std::string id;
    cv::Mat rgb;
    cv::Mat mask;
    cv::Mat edges;
};

/// Throws DataError when files are unreadable or sizes disagree.
Sample load_sample(const SampleRecord& record);

struct AugmentConfig {
    bool enabled = true;
    /// Rotation angle is drawn uniformly from [0, max_rotation] degrees.
    double max_rotation = 90.0;
    /// Each enabled flip is applied with probability 1/2.
    bool horizontal_flip = true;
    bool vertical_flip = true;
    int crop = 256;
    int crops_per_image = 1;

    void validate() const;
    friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

/// One concrete draw of the augmentation.
struct AugmentParams {
    double angle = 0.0;
    bool horizontal_flip = false;
    bool vertical_flip = false;
    /// Resize factor applied after the valid-region crop (>= 1; 1 unless the
    /// region is smaller than the crop).
    double scale = 1.0;
    /// Top-left of the crop within the (scaled) valid region.
    int crop_x = 0;
    int crop_y = 0;
};

/// Size of the largest axis-aligned rectangle inside a cols x rows image
/// rotated by `degrees`, as (width, height).
cv::Size rotated_valid_size(int cols, int rows, double degrees);

/// Rotation (reflect-101 fill) and valid-region crop, flips, then a crop of
/// `crop` x `crop`. The image uses bilinear interpolation, mask and edges
/// nearest neighbour, all with the same geometry.
Sample apply_augment(const Sample& sample, const AugmentParams& params, int crop);

/// Draws parameters for one crop. Sets `scale` > 1 when the valid region is
/// smaller than the crop.
AugmentParams draw_augment_params(const cv::Size& image_size, const AugmentConfig& config,
                                  std::mt19937_64& rng);

/// `crops_per_image` independent augmentations. Warns once per process on
/// stderr when an image has to be enlarged to fit the crop.
std::vector<Sample> augment(const Sample& sample, const AugmentConfig& config, std::mt19937_64& rng);

struct ImbalanceStats {
    std::uint64_t crack_pixels = 0;
    std::uint64_t total_pixels = 0;
    /// Percentages rounded to two decimals.
    double crack_percent = 0.0;
    double background_percent = 0.0;
};

ImbalanceStats imbalance_stats(const std::vector<cv::Mat>& masks);
ImbalanceStats imbalance_stats(const Manifest& manifest);

/// Per-epoch shuffled batches. The order depends only on (seed, epoch); with
/// `deterministic` false the seed is replaced by a random device draw.
class BatchSchedule {
public:
    BatchSchedule(std::size_t count, int batch_size, std::uint64_t seed, bool deterministic = true);

    /// Index batches for one epoch; the last batch may be short.
    [[nodiscard]] std::vector<std::vector<std::size_t>> epoch(int epoch) const;
    [[nodiscard]] std::size_t batches_per_epoch() const noexcept;

private:
    std::size_t count_;
    int batch_size_;
    std::uint64_t seed_;
};

}  // namespace scnet
