#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scnet/metrics.hpp"

namespace scnet {

struct RunMetrics {
    std::string name;
    MetricReport report;
};

/// Parses a metrics CSV written with kMetricsCsvHeader. Throws DataError on a
/// different header or schema, or a malformed row.
std::vector<RunMetrics> parse_metrics_csv(const std::string& text);

/// Parses "name,threshold,recall,precision" rows, grouped by name in file order.
std::vector<std::pair<std::string, std::vector<PrPoint>>> parse_prc_csv(const std::string& text);

/// Every run below `root` (directories holding metrics.csv), sorted by path,
/// with curves from the prc.csv next to each. Throws DataError listing every
/// missing file when a run lacks its curve or no run is found.
std::vector<RunMetrics> collect_runs(const std::filesystem::path& root);

/// Precision against recall for each run on one axis, legend "name (AUPRC x)".
void render_pr_plot(const std::vector<RunMetrics>& runs, const std::filesystem::path& png);

struct ReportFiles {
    std::filesystem::path summary;
    std::filesystem::path breakdown;
    std::filesystem::path plot;
    /// Empty when the run directory holds no ablation.csv.
    std::filesystem::path ablation;
};

/// summary.csv (every run's metrics row), breakdown.csv (TP/FP/FN shares for a
/// pie chart), pr_curves.png and, if present, the ablation table, all in `out`.
ReportFiles write_report(const std::filesystem::path& run_dir, const std::filesystem::path& out);

}  // namespace scnet
