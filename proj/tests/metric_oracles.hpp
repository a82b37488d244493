#pragma once

// Brute-force metric oracles: every threshold and patch is enumerated
// pixel by pixel with no shared helpers from the library.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> prob;
    std::vector<std::uint8_t> gt;
};

struct Counts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count_at(const std::vector<Image>& images, double t) {
    Counts c;
    for (const auto& im : images)
        for (std::size_t i = 0; i < im.prob.size(); ++i) {
            const bool p = static_cast<double>(im.prob[i]) >= t;
            const bool g = im.gt[i] == 1;
            if (p && g) ++c.tp;
            if (p && !g) ++c.fp;
            if (!p && g) ++c.fn;
            if (!p && !g) ++c.tn;
        }
    return c;
}

inline double safe_div(double a, double b) { return b == 0 ? 0.0 : a / b; }

inline double precision(const Counts& c) { return safe_div(c.tp, c.tp + c.fp); }
inline double recall(const Counts& c) { return safe_div(c.tp, c.tp + c.fn); }
inline double f1(const Counts& c) {
    const double p = precision(c), r = recall(c);
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}
inline double iou(const Counts& c) { return safe_div(c.tp, c.tp + c.fp + c.fn); }

struct Region {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Patch membership is computed per pixel and tallied in a map keyed by patch id.
inline Region region_at(const std::vector<Image>& images, double t, int patch) {
    Region r;
    for (const auto& im : images) {
        struct Tally {
            long pixels = 0, crack = 0, predicted = 0, hits = 0;
        };
        std::map<std::pair<int, int>, Tally> patches;
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * im.width + x;
                auto& tally = patches[{y / patch, x / patch}];
                const bool g = im.gt[i] == 1;
                const bool p = static_cast<double>(im.prob[i]) >= t;
                tally.pixels += 1;
                tally.crack += g;
                tally.predicted += p;
                tally.hits += g && p;
            }
        for (const auto& [_, s] : patches) {
            // Integer forms of "crack >= 5% of pixels" and "hits >= 50% of crack".
            const bool gt_pos = 100 * s.crack >= 5 * s.pixels;
            const bool det = s.crack > 0 ? 2 * s.hits >= s.crack : 100 * s.predicted >= 5 * s.pixels;
            if (gt_pos && det) ++r.tp;
            if (!gt_pos && det) ++r.fp;
            if (gt_pos && !det) ++r.fn;
            if (!gt_pos && !det) ++r.tn;
        }
    }
    return r;
}

inline double auprc(std::vector<std::pair<double, double>> recall_precision) {
    std::sort(recall_precision.begin(), recall_precision.end(), [](auto a, auto b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    });
    if (recall_precision.front().first > 0)
        recall_precision.insert(recall_precision.begin(), {0.0, recall_precision.front().second});
    double area = 0;
    for (std::size_t i = 1; i < recall_precision.size(); ++i) {
        const double w = recall_precision[i].first - recall_precision[i - 1].first;
        area += w * 0.5 * (recall_precision[i].second + recall_precision[i - 1].second);
    }
    return area;
}

}  // namespace oracle
