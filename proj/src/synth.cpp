#include "scnet/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <opencv2/imgproc.hpp>

#include "scnet/errors.hpp"
#include "scnet/image_io.hpp"

namespace scnet {

std::string to_string(SynthStyle s) { return s == SynthStyle::Pavement ? "pavement" : "concrete"; }

SynthStyle parse_synth_style(const std::string& name) {
    if (name == "pavement") return SynthStyle::Pavement;
    if (name == "concrete") return SynthStyle::Concrete;
    throw ConfigError("unknown synthetic style '" + name + "' (pavement, concrete)");
}

void SynthConfig::validate() const {
    if (count < 1) throw ConfigError("synth: count must be >= 1");
    if (size < 32) throw ConfigError("synth: size must be >= 32");
    if (!(foreground_rate > 0.0 && foreground_rate < 0.5))
        throw ConfigError("synth: foreground_rate must lie in (0, 0.5)");
    if (min_width < 1 || max_width < min_width) throw ConfigError("synth: need 1 <= min_width <= max_width");
}

namespace {

// Coarse aggregate: strong per-pixel grain plus scattered stones.
cv::Mat pavement_background(int size, std::mt19937_64& rng) {
    cv::Mat grey(size, size, CV_32F);
    std::normal_distribution<float> grain(0.0f, 18.0f);
    const float base = std::uniform_real_distribution<float>(105.0f, 135.0f)(rng);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) grey.at<float>(y, x) = base + grain(rng);
    std::uniform_int_distribution<int> pos(0, size - 1);
    std::uniform_int_distribution<int> radius(1, 3);
    std::uniform_real_distribution<float> shade(-45.0f, 45.0f);
    const int stones = size * size / 60;
    for (int k = 0; k < stones; ++k) {
        const cv::Point c(pos(rng), pos(rng));
        const float v = base + shade(rng);
        cv::circle(grey, c, radius(rng), cv::Scalar(v), cv::FILLED, cv::LINE_8);
    }
    return grey;
}

// Smooth cast surface: faint low-frequency blotches and fine noise.
cv::Mat concrete_background(int size, std::mt19937_64& rng) {
    const int coarse = std::max(2, size / 16);
    cv::Mat low(coarse, coarse, CV_32F);
    std::normal_distribution<float> blotch(0.0f, 8.0f);
    for (int y = 0; y < coarse; ++y)
        for (int x = 0; x < coarse; ++x) low.at<float>(y, x) = blotch(rng);
    cv::Mat grey;
    cv::resize(low, grey, cv::Size(size, size), 0, 0, cv::INTER_CUBIC);
    const float base = std::uniform_real_distribution<float>(160.0f, 185.0f)(rng);
    std::normal_distribution<float> grain(0.0f, 4.0f);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) grey.at<float>(y, x) += base + grain(rng);
    return grey;
}

}  // namespace

Sample synth_sample(const SynthConfig& config, int index) {
    config.validate();
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(config.style)};
    std::mt19937_64 rng(seq);
    const int n = config.size;

    cv::Mat grey = config.style == SynthStyle::Pavement ? pavement_background(n, rng) : concrete_background(n, rng);

    cv::Mat mask = cv::Mat::zeros(n, n, CV_8U);
    const auto target = static_cast<int>(std::ceil(config.foreground_rate * n * n));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> turn(0.0, 0.3);
    std::uniform_int_distribution<int> width(config.min_width, config.max_width);
    const double step = std::max(2.0, n / 24.0);
    int crack = 0;
    while (crack < target) {
        // A new crack starts anywhere and wanders with a slowly turning heading.
        cv::Point2d p(unit(rng) * n, unit(rng) * n);
        double heading = unit(rng) * 2.0 * std::numbers::pi;
        const int thickness = width(rng);
        while (crack < target) {
            const cv::Point2d q(p.x + step * std::cos(heading), p.y + step * std::sin(heading));
            cv::line(mask, cv::Point(cvRound(p.x), cvRound(p.y)), cv::Point(cvRound(q.x), cvRound(q.y)),
                     cv::Scalar(1), thickness, cv::LINE_8);
            crack = cv::countNonZero(mask);
            if (q.x < 0 || q.y < 0 || q.x >= n || q.y >= n) break;
            p = q;
            heading += turn(rng);
        }
    }

    std::normal_distribution<float> crack_shade(0.0f, 6.0f);
    const float depth = config.style == SynthStyle::Pavement ? 0.3f : 0.4f;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (mask.at<std::uint8_t>(y, x)) grey.at<float>(y, x) = grey.at<float>(y, x) * depth + crack_shade(rng);

    // Slight colour cast: warm grey for asphalt-like, cool grey for concrete-like.
    const cv::Vec3f tint = config.style == SynthStyle::Pavement ? cv::Vec3f(1.04f, 1.0f, 0.95f)
                                                                : cv::Vec3f(0.97f, 1.0f, 1.03f);
    cv::Mat rgb(n, n, CV_8UC3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float v = grey.at<float>(y, x);
            for (int c = 0; c < 3; ++c) rgb.at<cv::Vec3b>(y, x)[c] = cv::saturate_cast<std::uint8_t>(v * tint[c]);
        }

    char id[64];
    std::snprintf(id, sizeof id, "%s-%04d", to_string(config.style).c_str(), index);
    return Sample{id, rgb, mask, {}};
}

Manifest write_synth_corpus(const std::filesystem::path& root, const SynthConfig& config) {
    config.validate();
    Manifest manifest;
    for (int i = 0; i < config.count; ++i) {
        const Sample s = synth_sample(config, i);
        const auto image = root / "images" / (s.id + ".png");
        const auto mask = root / "masks" / (s.id + ".png");
        write_rgb(image, s.rgb);
        write_binary(mask, s.mask);
        manifest.records.push_back({s.id, image.string(), mask.string(), {}, to_string(config.style), {}});
    }
    write_manifest_file(root / "manifest.json", manifest);
    return manifest;
}

}  // namespace scnet
