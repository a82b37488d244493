#include "scnet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace scnet {
namespace {

void require_binary(std::span<const std::uint8_t> v, const char* what) {
    for (std::uint8_t x : v)
        if (x > 1) throw DataError(std::string(what) + ": expected a binary map");
}

void require_grid(std::span<const double> t) {
    if (t.empty()) throw ConfigError("threshold list is empty");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0 && t[i] < 1.0)) throw ConfigError("thresholds must lie in (0, 1)");
        if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError("thresholds must be strictly increasing");
    }
}

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
    if (pred.size() != gt.size()) throw ShapeError("confusion_counts: size mismatch");
    require_binary(pred, "confusion_counts");
    require_binary(gt, "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i]) (gt[i] ? c.tp : c.fp) += 1;
        else (gt[i] ? c.fn : c.tn) += 1;
    }
    return c;
}

double f1_from(double precision, double recall) {
    return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

PixelScores pixel_scores(const ConfusionCounts& c) {
    PixelScores s;
    s.precision = ratio(c.tp, c.tp + c.fp);
    s.recall = ratio(c.tp, c.tp + c.fn);
    s.f1 = f1_from(s.precision, s.recall);
    s.iou = ratio(c.tp, c.tp + c.fp + c.fn);
    return s;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
    return g;
}

std::vector<ConfusionCounts> counts_per_threshold(std::span<const EvalImage> images,
                                                  std::span<const double> thresholds) {
    require_grid(thresholds);
    const std::size_t n = thresholds.size();
    // hist[k]: pixels predicted crack for exactly the first k thresholds.
    std::vector<std::uint64_t> pos(n + 1, 0);
    std::vector<std::uint64_t> neg(n + 1, 0);
    for (const EvalImage& im : images) {
        if (im.prob.channels() != 1 || !(im.prob.shape() == im.gt.shape()))
            throw ShapeError("evaluation: probability " + to_string(im.prob.shape()) + " vs ground truth " +
                             to_string(im.gt.shape()));
        require_binary(im.gt.values(), "evaluation");
        const auto p = im.prob.values();
        const auto g = im.gt.values();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto k = static_cast<std::size_t>(
                std::upper_bound(thresholds.begin(), thresholds.end(), static_cast<double>(p[i])) -
                thresholds.begin());
            (g[i] ? pos : neg)[k] += 1;
        }
    }
    std::vector<ConfusionCounts> out(n);
    std::uint64_t total_pos = 0;
    std::uint64_t total_neg = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        total_pos += pos[k];
        total_neg += neg[k];
    }
    // Walk from the largest threshold down, accumulating pixels above it.
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    for (std::size_t j = n; j-- > 0;) {
        tp += pos[j + 1];
        fp += neg[j + 1];
        out[j] = {tp, fp, total_pos - tp, total_neg - fp};
    }
    return out;
}

std::vector<PrPoint> pr_curve(std::span<const EvalImage> images, std::span<const double> thresholds) {
    const auto counts = counts_per_threshold(images, thresholds);
    std::vector<PrPoint> out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const PixelScores s = pixel_scores(counts[i]);
        out.push_back({thresholds[i], s.recall, s.precision});
    }
    return out;
}

double auprc(std::span<const PrPoint> points) {
    if (points.size() < 2) throw DataError("auprc needs at least two curve points");
    std::vector<PrPoint> p(points.begin(), points.end());
    std::sort(p.begin(), p.end(), [](const PrPoint& a, const PrPoint& b) {
        return a.recall != b.recall ? a.recall < b.recall : a.precision > b.precision;
    });
    double area = p.front().recall * p.front().precision;
    for (std::size_t i = 1; i < p.size(); ++i)
        area += (p[i].recall - p[i - 1].recall) * (p[i].precision + p[i - 1].precision) / 2;
    return area;
}

ThresholdChoice iterative_threshold(std::span<const EvalImage> images, std::span<const double> grid) {
    const auto counts = counts_per_threshold(images, grid);
    ThresholdChoice best{grid[0], pixel_scores(counts[0]).f1};
    for (std::size_t i = 1; i < counts.size(); ++i) {
        const double f1 = pixel_scores(counts[i]).f1;
        if (f1 > best.f1) best = {grid[i], f1};
    }
    return best;
}

RegionCounts region_counts(const Mask& pred, const Mask& gt, const RegionRules& rules) {
    if (!(pred.shape() == gt.shape()) || pred.channels() != 1)
        throw ShapeError("region_counts: prediction " + to_string(pred.shape()) + " vs ground truth " +
                         to_string(gt.shape()));
    if (rules.patch < 1 || rules.patch > gt.height() || rules.patch > gt.width())
        throw DataError("region_counts: patch size " + std::to_string(rules.patch) + " exceeds image " +
                        to_string(gt.shape()));
    require_binary(pred.values(), "region_counts");
    require_binary(gt.values(), "region_counts");
    // Inclusive comparisons; the slack absorbs rounding in fraction * count.
    constexpr double kSlack = 1e-9;
    RegionCounts c;
    for (int y0 = 0; y0 < gt.height(); y0 += rules.patch) {
        for (int x0 = 0; x0 < gt.width(); x0 += rules.patch) {
            const int y1 = std::min(y0 + rules.patch, gt.height());
            const int x1 = std::min(x0 + rules.patch, gt.width());
            const double pixels = static_cast<double>(y1 - y0) * (x1 - x0);
            int crack = 0;
            int predicted = 0;
            int hits = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const bool g = gt(0, y, x);
                    const bool p = pred(0, y, x);
                    crack += g;
                    predicted += p;
                    hits += g && p;
                }
            const bool gt_positive = crack >= rules.gt_fraction * pixels - kSlack;
            const bool detected = crack > 0 ? hits >= rules.detect_fraction * crack - kSlack
                                            : predicted >= rules.gt_fraction * pixels - kSlack;
            if (gt_positive) (detected ? c.tp : c.fn) += 1;
            else (detected ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

RegionScores region_scores(const RegionCounts& c) {
    RegionScores s;
    s.precision = ratio(c.tp, c.tp + c.fp);
    s.recall = ratio(c.tp, c.tp + c.fn);
    s.f1 = f1_from(s.precision, s.recall);
    return s;
}

Mask binarize(const FeatureMap& prob, double threshold) {
    Mask m(prob.shape());
    const auto p = prob.values();
    auto out = m.values();
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<double>(p[i]) >= threshold ? 1 : 0;
    return m;
}

MetricReport evaluate_at(std::span<const EvalImage> images, double threshold, std::span<const double> grid,
                         const RegionRules& rules) {
    const std::vector<double> fallback = default_threshold_grid();
    if (grid.empty()) grid = fallback;
    MetricReport r;
    r.threshold = threshold;
    for (const EvalImage& im : images) {
        const Mask pred = binarize(im.prob, threshold);
        r.counts += confusion_counts(pred.values(), im.gt.values());
        r.region_counts += region_counts(pred, im.gt, rules);
    }
    r.pixel = pixel_scores(r.counts);
    r.region = region_scores(r.region_counts);
    r.curve = pr_curve(images, grid);
    r.auprc = r.curve.size() >= 2 ? auprc(r.curve) : 0.0;
    return r;
}

MetricReport evaluate_predictions(std::span<const EvalImage> images, std::span<const double> grid,
                                  const RegionRules& rules) {
    const std::vector<double> fallback = default_threshold_grid();
    if (grid.empty()) grid = fallback;
    return evaluate_at(images, iterative_threshold(images, grid).threshold, grid, rules);
}

std::vector<BreakdownRow> error_breakdown(const std::vector<std::pair<std::string, MetricReport>>& reports) {
    if (reports.empty()) throw DataError("error_breakdown needs at least one report");
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (const auto& [_, r] : reports) {
        tp += r.counts.tp;
        fp += r.counts.fp;
        fn += r.counts.fn;
    }
    std::vector<BreakdownRow> rows;
    for (const auto& [name, r] : reports)
        rows.push_back({name, 100 * ratio(r.counts.tp, tp), 100 * ratio(r.counts.fp, fp),
                        100 * ratio(r.counts.fn, fn)});
    return rows;
}

std::string metrics_csv_row(const std::string& name, const MetricReport& r) {
    std::ostringstream s;
    s << kMetricsCsvSchema << ',' << name << ',' << fmt(r.threshold) << ',' << r.counts.tp << ','
      << r.counts.fp << ',' << r.counts.fn << ',' << r.counts.tn << ',' << fmt(r.pixel.precision) << ','
      << fmt(r.pixel.recall) << ',' << fmt(r.pixel.f1) << ',' << fmt(r.pixel.iou) << ','
      << r.region_counts.tp << ',' << r.region_counts.fp << ',' << r.region_counts.fn << ','
      << fmt(r.region.precision) << ',' << fmt(r.region.recall) << ',' << fmt(r.region.f1) << ','
      << fmt(r.auprc);
    return s.str();
}

std::string prc_csv(const std::string& name, const std::vector<PrPoint>& curve, bool header) {
    std::ostringstream s;
    if (header) s << "name,threshold,recall,precision\n";
    for (const PrPoint& p : curve)
        s << name << ',' << fmt(p.threshold) << ',' << fmt(p.recall) << ',' << fmt(p.precision) << '\n';
    return s.str();
}

std::string breakdown_csv(const std::vector<BreakdownRow>& rows) {
    std::ostringstream s;
    s << "model,tp_share,fp_share,fn_share\n";
    for (const auto& r : rows)
        s << r.model << ',' << fmt(r.tp_share) << ',' << fmt(r.fp_share) << ',' << fmt(r.fn_share) << '\n';
    return s.str();
}

}  // namespace scnet
