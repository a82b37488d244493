#include "scnet/datapipe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>

#include <opencv2/imgproc.hpp>

#include "scnet/errors.hpp"
#include "scnet/image_io.hpp"
#include "json_util.hpp"

namespace fs = std::filesystem;

namespace scnet {

void to_json(nlohmann::json& j, const ManifestLayout& l) {
    j = {{"image_dir", l.image_dir},
         {"mask_dir", l.mask_dir},
         {"edge_dir", l.edge_dir},
         {"image_extensions", l.image_extensions},
         {"mask_suffix", l.mask_suffix},
         {"tag", l.tag}};
}

void from_json(const nlohmann::json& j, ManifestLayout& l) {
    detail::reject_unknown_keys(j, "data.layout",
                                {"image_dir", "mask_dir", "edge_dir", "image_extensions", "mask_suffix", "tag"});
    detail::read_if(j, "image_dir", l.image_dir);
    detail::read_if(j, "mask_dir", l.mask_dir);
    detail::read_if(j, "edge_dir", l.edge_dir);
    detail::read_if(j, "image_extensions", l.image_extensions);
    detail::read_if(j, "mask_suffix", l.mask_suffix);
    detail::read_if(j, "tag", l.tag);
}

namespace {

std::string shape_text(const cv::Size& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

Manifest load_manifest(const fs::path& root, const ManifestLayout& layout, std::vector<std::string>* warnings) {
    if (!fs::is_directory(root)) throw DataError("dataset root not found: " + root.string());
    const fs::path image_dir = root / layout.image_dir;
    const fs::path mask_dir = root / layout.mask_dir;
    Manifest manifest;
    if (!fs::is_directory(image_dir)) {
        if (warnings) warnings->push_back("no image folder at " + image_dir.string() + "; manifest is empty");
        return manifest;
    }
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = lower(entry.path().extension().string());
        if (std::find(layout.image_extensions.begin(), layout.image_extensions.end(), ext) !=
            layout.image_extensions.end())
            images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) {
        if (warnings) warnings->push_back("no images under " + image_dir.string() + "; manifest is empty");
        return manifest;
    }

    std::vector<std::string> orphans;
    std::vector<std::string> mismatched;
    for (const auto& image : images) {
        const std::string id = image.stem().string();
        const fs::path mask = mask_dir / (id + layout.mask_suffix);
        if (!fs::exists(mask)) {
            orphans.push_back(image.string());
            continue;
        }
        SampleRecord r{id, image.string(), mask.string(), {}, layout.tag, {}};
        if (!layout.edge_dir.empty()) {
            const fs::path edge = root / layout.edge_dir / (id + ".edge.png");
            if (fs::exists(edge)) r.edge = edge.string();
        }
        const cv::Size image_size = read_rgb(image).size();
        const cv::Size mask_size = read_binary(mask).size();
        if (image_size != mask_size) {
            mismatched.push_back(image.string() + " is " + shape_text(image_size) + " but " + mask.string() +
                                 " is " + shape_text(mask_size));
            continue;
        }
        manifest.records.push_back(std::move(r));
    }
    if (!orphans.empty() || !mismatched.empty()) {
        std::string msg = "invalid dataset under " + root.string() + ":";
        for (const auto& o : orphans) msg += "\n  image without mask: " + o;
        for (const auto& m : mismatched) msg += "\n  size mismatch: " + m;
        throw DataError(msg);
    }
    return manifest;
}

Manifest read_manifest_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw DataError("manifest " + path.string() + " must be a JSON array");
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base / p).lexically_normal().string();
    };
    Manifest m;
    for (const auto& item : j) {
        SampleRecord r;
        try {
            r.id = item.at("id").get<std::string>();
            r.image = resolve(item.at("image").get<std::string>());
            r.mask = resolve(item.at("mask").get<std::string>());
            r.edge = resolve(item.value("edge", std::string{}));
            r.tag = item.value("tag", std::string{});
            r.split = item.value("split", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest " + path.string() + ": " + e.what());
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

void write_manifest_file(const fs::path& path, const Manifest& manifest) {
    const fs::path base = fs::absolute(path).parent_path();
    auto relative = [&](const std::string& p) {
        if (p.empty()) return p;
        return fs::absolute(p).lexically_normal().lexically_proximate(base).string();
    };
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : manifest.records) {
        j.push_back({{"id", r.id},
                     {"image", relative(r.image)},
                     {"mask", relative(r.mask)},
                     {"edge", relative(r.edge)},
                     {"tag", r.tag},
                     {"split", r.split}});
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
}

std::pair<Manifest, Manifest> split_holdout(const Manifest& manifest, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must lie in (0, 1)");
    std::vector<std::size_t> order(manifest.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto test_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(manifest.size()) * fraction + 1e-9));
    Manifest train, test;
    for (std::size_t k = 0; k < order.size(); ++k) {
        SampleRecord r = manifest.records[order[k]];
        r.split = k < test_count ? "test" : "train";
        (k < test_count ? test : train).records.push_back(std::move(r));
    }
    return {std::move(train), std::move(test)};
}

Sample load_sample(const SampleRecord& record) {
    Sample s{record.id, read_rgb(record.image), read_binary(record.mask), {}};
    if (!record.edge.empty()) s.edges = read_binary(record.edge);
    if (s.mask.size() != s.rgb.size() || (!s.edges.empty() && s.edges.size() != s.rgb.size()))
        throw DataError("sample " + record.id + ": image " + shape_text(s.rgb.size()) + ", mask " +
                        shape_text(s.mask.size()) + (s.edges.empty() ? "" : ", edges " + shape_text(s.edges.size())));
    return s;
}

void AugmentConfig::validate() const {
    if (!(max_rotation >= 0.0 && max_rotation <= 90.0))
        throw ConfigError("augment.max_rotation must lie in [0, 90]");
    if (crop < 1) throw ConfigError("augment.crop must be >= 1");
    if (crops_per_image < 1) throw ConfigError("augment.crops_per_image must be >= 1");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
    j = {{"enabled", c.enabled},
         {"max_rotation", c.max_rotation},
         {"horizontal_flip", c.horizontal_flip},
         {"vertical_flip", c.vertical_flip},
         {"crop", c.crop},
         {"crops_per_image", c.crops_per_image}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
    detail::reject_unknown_keys(j, "data.augment",
                                {"enabled", "max_rotation", "horizontal_flip", "vertical_flip", "crop",
                                 "crops_per_image"});
    detail::read_if(j, "enabled", c.enabled);
    detail::read_if(j, "max_rotation", c.max_rotation);
    detail::read_if(j, "horizontal_flip", c.horizontal_flip);
    detail::read_if(j, "vertical_flip", c.vertical_flip);
    detail::read_if(j, "crop", c.crop);
    detail::read_if(j, "crops_per_image", c.crops_per_image);
}

cv::Size rotated_valid_size(int cols, int rows, double degrees) {
    if (degrees == 0.0) return {cols, rows};
    if (degrees == 90.0) return {rows, cols};
    const double a = degrees * std::numbers::pi / 180.0;
    const double s = std::abs(std::sin(a));
    const double c = std::abs(std::cos(a));
    const bool wide = cols >= rows;
    const double longer = wide ? cols : rows;
    const double shorter = wide ? rows : cols;
    double w, h;
    if (shorter <= 2.0 * s * c * longer || std::abs(s - c) < 1e-10) {
        const double half = 0.5 * shorter;
        w = wide ? half / s : half / c;
        h = wide ? half / c : half / s;
    } else {
        const double cos2 = c * c - s * s;
        w = (cols * c - rows * s) / cos2;
        h = (rows * c - cols * s) / cos2;
    }
    // Drop a pixel on each side so interpolation never reaches the fill.
    return {std::max(1, static_cast<int>(std::floor(w)) - 2), std::max(1, static_cast<int>(std::floor(h)) - 2)};
}

namespace {

cv::Size scaled(const cv::Size& s, double factor) {
    if (factor == 1.0) return s;
    return {static_cast<int>(std::ceil(s.width * factor)), static_cast<int>(std::ceil(s.height * factor))};
}

cv::Mat rotate_valid(const cv::Mat& src, double degrees, int interpolation) {
    if (src.empty() || degrees == 0.0) return src.clone();
    cv::Mat out;
    if (degrees == 90.0) {
        cv::rotate(src, out, cv::ROTATE_90_COUNTERCLOCKWISE);
        return out;
    }
    const double a = degrees * std::numbers::pi / 180.0;
    const double s = std::abs(std::sin(a));
    const double c = std::abs(std::cos(a));
    const int bw = static_cast<int>(std::ceil(src.cols * c + src.rows * s));
    const int bh = static_cast<int>(std::ceil(src.cols * s + src.rows * c));
    const cv::Point2f centre((src.cols - 1) * 0.5f, (src.rows - 1) * 0.5f);
    cv::Mat m = cv::getRotationMatrix2D(centre, degrees, 1.0);
    m.at<double>(0, 2) += (bw - 1) * 0.5 - centre.x;
    m.at<double>(1, 2) += (bh - 1) * 0.5 - centre.y;
    cv::warpAffine(src, out, m, cv::Size(bw, bh), interpolation, cv::BORDER_REFLECT_101);
    const cv::Size valid = rotated_valid_size(src.cols, src.rows, degrees);
    const cv::Rect window((bw - valid.width) / 2, (bh - valid.height) / 2, valid.width, valid.height);
    return out(window).clone();
}

cv::Mat transform(const cv::Mat& src, const AugmentParams& p, int crop, int interpolation) {
    if (src.empty()) return {};
    cv::Mat m = rotate_valid(src, p.angle, interpolation);
    if (p.horizontal_flip) cv::flip(m, m, 1);
    if (p.vertical_flip) cv::flip(m, m, 0);
    if (p.scale != 1.0) {
        cv::Mat big;
        // Plain INTER_NEAREST in resize is not centre-aligned with INTER_LINEAR.
        const int resize_mode = interpolation == cv::INTER_NEAREST ? cv::INTER_NEAREST_EXACT : interpolation;
        cv::resize(m, big, scaled(m.size(), p.scale), 0, 0, resize_mode);
        m = big;
    }
    const cv::Rect window(p.crop_x, p.crop_y, crop, crop);
    if ((window & cv::Rect(0, 0, m.cols, m.rows)) != window)
        throw DataError("augment: crop window " + std::to_string(crop) + " at (" + std::to_string(p.crop_x) +
                        "," + std::to_string(p.crop_y) + ") exceeds the " + shape_text(m.size()) +
                        " valid region");
    return m(window).clone();
}

}  // namespace

Sample apply_augment(const Sample& sample, const AugmentParams& params, int crop) {
    return Sample{sample.id, transform(sample.rgb, params, crop, cv::INTER_LINEAR),
                  transform(sample.mask, params, crop, cv::INTER_NEAREST),
                  transform(sample.edges, params, crop, cv::INTER_NEAREST)};
}

AugmentParams draw_augment_params(const cv::Size& image_size, const AugmentConfig& config, std::mt19937_64& rng) {
    AugmentParams p;
    p.angle = std::uniform_real_distribution<double>(0.0, config.max_rotation)(rng);
    std::bernoulli_distribution coin(0.5);
    p.horizontal_flip = config.horizontal_flip && coin(rng);
    p.vertical_flip = config.vertical_flip && coin(rng);
    const cv::Size valid = rotated_valid_size(image_size.width, image_size.height, p.angle);
    const int shortest = std::min(valid.width, valid.height);
    if (shortest < config.crop) p.scale = static_cast<double>(config.crop) / shortest;
    const cv::Size region = scaled(valid, p.scale);
    p.crop_x = std::uniform_int_distribution<int>(0, region.width - config.crop)(rng);
    p.crop_y = std::uniform_int_distribution<int>(0, region.height - config.crop)(rng);
    return p;
}

std::vector<Sample> augment(const Sample& sample, const AugmentConfig& config, std::mt19937_64& rng) {
    config.validate();
    static std::atomic<bool> warned{false};
    std::vector<Sample> out;
    for (int k = 0; k < config.crops_per_image; ++k) {
        const AugmentParams p = draw_augment_params(sample.rgb.size(), config, rng);
        if (p.scale > 1.0 && !warned.exchange(true)) {
            std::cerr << "warning: sample " << sample.id << " is smaller than the " << config.crop
                      << " crop after rotation; enlarging (reported once)\n";
        }
        out.push_back(apply_augment(sample, p, config.crop));
    }
    return out;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

ImbalanceStats finish(std::uint64_t crack, std::uint64_t total) {
    ImbalanceStats s{crack, total, 0.0, 100.0};
    if (total > 0) {
        const double pct = 100.0 * static_cast<double>(crack) / static_cast<double>(total);
        s.crack_percent = round2(pct);
        s.background_percent = round2(100.0 - pct);
    }
    return s;
}

}  // namespace

ImbalanceStats imbalance_stats(const std::vector<cv::Mat>& masks) {
    std::uint64_t crack = 0, total = 0;
    for (const auto& m : masks) {
        crack += static_cast<std::uint64_t>(cv::countNonZero(m));
        total += m.total();
    }
    return finish(crack, total);
}

ImbalanceStats imbalance_stats(const Manifest& manifest) {
    std::uint64_t crack = 0, total = 0;
    for (const auto& r : manifest.records) {
        const cv::Mat m = read_binary(r.mask);
        crack += static_cast<std::uint64_t>(cv::countNonZero(m));
        total += m.total();
    }
    return finish(crack, total);
}

BatchSchedule::BatchSchedule(std::size_t count, int batch_size, std::uint64_t seed, bool deterministic)
    : count_(count), batch_size_(batch_size), seed_(seed) {
    if (count == 0) throw DataError("batch schedule over an empty sample list");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!deterministic) seed_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
}

std::size_t BatchSchedule::batches_per_epoch() const noexcept {
    return (count_ + static_cast<std::size_t>(batch_size_) - 1) / static_cast<std::size_t>(batch_size_);
}

std::vector<std::vector<std::size_t>> BatchSchedule::epoch(int epoch) const {
    std::vector<std::size_t> order(count_);
    for (std::size_t i = 0; i < count_; ++i) order[i] = i;
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count_; start += static_cast<std::size_t>(batch_size_)) {
        const std::size_t end = std::min(count_, start + static_cast<std::size_t>(batch_size_));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace scnet
