#pragma once

// Direct transcriptions of the loss definitions, used as test oracles. They
// favour obviousness over speed or numerical robustness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

inline long double sigmoid(long double v) { return 1.0L / (1.0L + std::exp(-v)); }

inline double focal(const std::vector<double>& logits, const std::vector<std::uint8_t>& y, double alpha,
                    double gamma) {
    long double total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const long double p = sigmoid(logits[i]);
        const long double pt = y[i] ? p : 1 - p;
        total += -alpha * std::pow(1 - pt, static_cast<long double>(gamma)) * std::log(pt);
    }
    return static_cast<double>(total);
}

inline double bce(const std::vector<double>& logits, const std::vector<std::uint8_t>& y, double w_fg = 1,
                  double w_bg = 1) {
    long double total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const long double p = sigmoid(logits[i]);
        total += y[i] ? -w_fg * std::log(p) : -w_bg * std::log(1 - p);
    }
    return static_cast<double>(total);
}

inline double soft_iou(const std::vector<double>& prob, const std::vector<std::uint8_t>& y) {
    long double inter = 0, sp = 0, sy = 0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        inter += prob[i] * y[i];
        sp += prob[i];
        sy += y[i];
    }
    return static_cast<double>(1 - inter / std::max(sp + sy - inter, 1e-7L));
}

/// Jaccard loss of the set of pixels flagged as mistakes.
inline double jaccard_of_mistakes(const std::vector<bool>& mistake, const std::vector<std::uint8_t>& y) {
    double positives = 0, missed_pos = 0, false_pos = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        positives += y[i];
        if (mistake[i]) (y[i] ? missed_pos : false_pos) += 1;
    }
    const double uni = positives + false_pos;
    if (uni == 0) return 0;
    return 1 - (positives - missed_pos) / uni;
}

/// Lovasz extension evaluated from its definition with an explicit set function.
inline double lovasz_hinge(const std::vector<double>& logits, const std::vector<std::uint8_t>& y) {
    const std::size_t n = logits.size();
    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = std::max(0.0, 1 - logits[i] * (y[i] ? 1 : -1));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return err[a] > err[b]; });
    std::vector<bool> in_set(n, false);
    double prev = jaccard_of_mistakes(in_set, y);
    double total = 0;
    for (std::size_t r = 0; r < n; ++r) {
        in_set[order[r]] = true;
        const double now = jaccard_of_mistakes(in_set, y);
        total += err[order[r]] * (now - prev);
        prev = now;
    }
    return total;
}

}  // namespace oracle
