#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scnet/tensor.hpp"

namespace scnet {

/// Crack is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws DataError on non-binary values, ShapeError on a size mismatch.
ConfusionCounts confusion_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

struct PixelScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};

/// Zero denominators give 0.
PixelScores pixel_scores(const ConfusionCounts& c);
double f1_from(double precision, double recall);

/// One probability map with its ground truth, both 1 x H x W.
struct EvalImage {
    FeatureMap prob;
    Mask gt;
};

/// {0.01, 0.02, ..., 0.99}
std::vector<double> default_threshold_grid();

/// Micro-aggregated counts over all images for each threshold; a pixel is
/// predicted crack when P >= t. Thresholds must be strictly increasing in (0, 1).
std::vector<ConfusionCounts> counts_per_threshold(std::span<const EvalImage> images,
                                                  std::span<const double> thresholds);

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

std::vector<PrPoint> pr_curve(std::span<const EvalImage> images, std::span<const double> thresholds);

/// Trapezoidal area over recall. Points are ordered by recall (ties by
/// descending precision) and, when the smallest recall is above 0, extended to
/// recall 0 at that point's precision. Throws DataError for fewer than 2 points.
double auprc(std::span<const PrPoint> points);

struct ThresholdChoice {
    double threshold = 0.0;
    double f1 = 0.0;
};

/// Grid threshold maximizing micro F1; ties go to the smallest threshold.
ThresholdChoice iterative_threshold(std::span<const EvalImage> images, std::span<const double> grid);

struct RegionRules {
    int patch = 32;
    /// A patch is crack in the ground truth when crack pixels >= gt_fraction * patch pixels.
    double gt_fraction = 0.05;
    /// A patch with crack pixels is detected when >= detect_fraction of them are predicted.
    /// A patch without crack pixels counts as detected when its predicted pixels
    /// reach gt_fraction of the patch.
    double detect_fraction = 0.50;
};

struct RegionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    RegionCounts& operator+=(const RegionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend bool operator==(const RegionCounts&, const RegionCounts&) = default;
};

/// Patch-level counts for one binary prediction. Border patches use their
/// actual pixel count. Throws DataError when the patch exceeds the image.
RegionCounts region_counts(const Mask& pred, const Mask& gt, const RegionRules& rules = {});

struct RegionScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

RegionScores region_scores(const RegionCounts& c);

/// Binarizes P >= threshold.
Mask binarize(const FeatureMap& prob, double threshold);

struct MetricReport {
    double threshold = 0.0;
    ConfusionCounts counts;
    PixelScores pixel;
    RegionCounts region_counts;
    RegionScores region;
    std::vector<PrPoint> curve;
    double auprc = 0.0;
};

/// Picks t* on the grid, then fills every score at t*.
MetricReport evaluate_predictions(std::span<const EvalImage> images,
                                  std::span<const double> grid = {}, const RegionRules& rules = {});

/// Scores at a fixed threshold (the curve and AUPRC still cover the grid).
MetricReport evaluate_at(std::span<const EvalImage> images, double threshold,
                         std::span<const double> grid = {}, const RegionRules& rules = {});

struct BreakdownRow {
    std::string model;
    /// Percent of all models' TP (FP, FN) pixels that this model accounts for.
    double tp_share = 0.0;
    double fp_share = 0.0;
    double fn_share = 0.0;
};

std::vector<BreakdownRow> error_breakdown(const std::vector<std::pair<std::string, MetricReport>>& reports);

// CSV renderings; the first line is the header, fields are fixed.
inline constexpr const char* kMetricsCsvHeader =
    "schema,name,threshold,tp,fp,fn,tn,precision,recall,f1,iou,region_tp,region_fp,region_fn,"
    "region_precision,region_recall,region_f1,auprc";
inline constexpr const char* kMetricsCsvSchema = "metrics-v1";
std::string metrics_csv_row(const std::string& name, const MetricReport& r);
std::string prc_csv(const std::string& name, const std::vector<PrPoint>& curve, bool header = true);
std::string breakdown_csv(const std::vector<BreakdownRow>& rows);

}  // namespace scnet
