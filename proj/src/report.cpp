#include "scnet/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "scnet/errors.hpp"
#include "scnet/image_io.hpp"

namespace fs = std::filesystem;

namespace scnet {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

double number(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(std::string("bad ") + what + " value '" + s + "'");
    }
}

std::uint64_t count(const std::string& s, const char* what) {
    return static_cast<std::uint64_t>(number(s, what));
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    out << text;
}

}  // namespace

std::vector<RunMetrics> parse_metrics_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kMetricsCsvHeader) throw DataError("metrics CSV: unexpected header");
    std::vector<RunMetrics> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        if (f.size() != 18) throw DataError("metrics CSV line " + std::to_string(i + 1) + ": expected 18 fields");
        if (f[0] != kMetricsCsvSchema) throw DataError("metrics CSV: unsupported schema '" + f[0] + "'");
        RunMetrics r;
        r.name = f[1];
        r.report.threshold = number(f[2], "threshold");
        r.report.counts = {count(f[3], "tp"), count(f[4], "fp"), count(f[5], "fn"), count(f[6], "tn")};
        r.report.pixel = {number(f[7], "precision"), number(f[8], "recall"), number(f[9], "f1"),
                          number(f[10], "iou")};
        r.report.region_counts.tp = count(f[11], "region_tp");
        r.report.region_counts.fp = count(f[12], "region_fp");
        r.report.region_counts.fn = count(f[13], "region_fn");
        r.report.region = region_scores(r.report.region_counts);
        r.report.auprc = number(f[17], "auprc");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<PrPoint>>> parse_prc_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "name,threshold,recall,precision") throw DataError("PR CSV: unexpected header");
    std::vector<std::pair<std::string, std::vector<PrPoint>>> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        if (f.size() != 4) throw DataError("PR CSV line " + std::to_string(i + 1) + ": expected 4 fields");
        if (out.empty() || out.back().first != f[0]) out.emplace_back(f[0], std::vector<PrPoint>{});
        out.back().second.push_back({number(f[1], "threshold"), number(f[2], "recall"), number(f[3], "precision")});
    }
    return out;
}

std::vector<RunMetrics> collect_runs(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("run directory not found: " + root.string());
    std::vector<fs::path> metric_files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() == "metrics.csv") metric_files.push_back(e.path());
    std::sort(metric_files.begin(), metric_files.end());
    if (metric_files.empty()) throw DataError("missing inputs: no metrics.csv below " + root.string());

    std::vector<std::string> missing;
    for (const auto& m : metric_files) {
        const auto prc = m.parent_path() / "prc.csv";
        if (!fs::exists(prc)) missing.push_back(prc.string());
    }
    if (!missing.empty()) {
        std::string msg = "missing inputs:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw DataError(msg);
    }

    std::vector<RunMetrics> runs;
    for (const auto& m : metric_files) {
        auto rows = parse_metrics_csv(read_text(m));
        const auto curves = parse_prc_csv(read_text(m.parent_path() / "prc.csv"));
        for (auto& r : rows) {
            for (const auto& [name, curve] : curves)
                if (name == r.name) r.report.curve = curve;
            if (r.report.curve.empty())
                throw DataError("missing inputs: no PR curve for run '" + r.name + "' in " +
                                (m.parent_path() / "prc.csv").string());
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

void render_pr_plot(const std::vector<RunMetrics>& runs, const fs::path& png) {
    const int legend_width = 300;
    const int w = 560 + legend_width, h = 540, left = 70, right = 20 + legend_width, top = 40, bottom = 60;
    const int pw = w - left - right, ph = h - top - bottom;
    cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
    auto to_px = [&](double recall, double precision) {
        return cv::Point(left + cvRound(recall * pw), top + cvRound((1.0 - precision) * ph));
    };
    const cv::Scalar axis(0, 0, 0), grid(225, 225, 225);
    for (int k = 0; k <= 10; ++k) {
        const double v = k / 10.0;
        cv::line(img, to_px(v, 0), to_px(v, 1), grid, 1);
        cv::line(img, to_px(0, v), to_px(1, v), grid, 1);
        char label[8];
        std::snprintf(label, sizeof label, "%.1f", v);
        cv::putText(img, label, to_px(v, 0) + cv::Point(-10, 18), cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1);
        cv::putText(img, label, to_px(0, v) + cv::Point(-32, 4), cv::FONT_HERSHEY_SIMPLEX, 0.4, axis, 1);
    }
    cv::rectangle(img, to_px(0, 1), to_px(1, 0), axis, 1);
    cv::putText(img, "Recall", cv::Point(left + pw / 2 - 25, h - 15), cv::FONT_HERSHEY_SIMPLEX, 0.55, axis, 1);
    cv::putText(img, "Precision", cv::Point(left - 40, top - 15), cv::FONT_HERSHEY_SIMPLEX, 0.5, axis, 1);

    static const cv::Scalar palette[] = {{200, 60, 20},  {30, 140, 30},  {20, 20, 200},  {160, 40, 160},
                                         {0, 150, 200},  {120, 120, 0},  {80, 80, 80},   {0, 90, 255}};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const cv::Scalar colour = palette[i % std::size(palette)];
        auto curve = runs[i].report.curve;
        std::sort(curve.begin(), curve.end(), [](const PrPoint& a, const PrPoint& b) {
            return a.recall < b.recall || (a.recall == b.recall && a.precision > b.precision);
        });
        std::vector<cv::Point> pts;
        for (const auto& p : curve) pts.push_back(to_px(p.recall, p.precision));
        if (pts.size() > 1) cv::polylines(img, pts, false, colour, 2, cv::LINE_AA);
        char label[128];
        std::snprintf(label, sizeof label, "%s (AUPRC %.3f)", runs[i].name.c_str(), runs[i].report.auprc);
        const cv::Point at(left + pw + 20, top + 14 + 20 * static_cast<int>(i));
        cv::line(img, at + cv::Point(0, -4), at + cv::Point(20, -4), colour, 2);
        cv::putText(img, label, at + cv::Point(26, 0), cv::FONT_HERSHEY_SIMPLEX, 0.42, axis, 1, cv::LINE_AA);
    }
    cv::Mat bgr;
    cv::cvtColor(img, bgr, cv::COLOR_RGB2BGR);
    write_image(png, bgr);
}

ReportFiles write_report(const fs::path& run_dir, const fs::path& out) {
    const auto runs = collect_runs(run_dir);
    ReportFiles files{out / "summary.csv", out / "breakdown.csv", out / "pr_curves.png", {}};

    std::string summary = std::string(kMetricsCsvHeader) + "\n";
    std::vector<std::pair<std::string, MetricReport>> reports;
    for (const auto& r : runs) {
        summary += metrics_csv_row(r.name, r.report) + "\n";
        reports.emplace_back(r.name, r.report);
    }
    write_text(files.summary, summary);
    write_text(files.breakdown, breakdown_csv(error_breakdown(reports)));
    render_pr_plot(runs, files.plot);

    const auto ablation = run_dir / "ablation.csv";
    if (fs::exists(ablation)) {
        files.ablation = out / "ablation_table.csv";
        if (fs::absolute(ablation) != fs::absolute(files.ablation)) write_text(files.ablation, read_text(ablation));
    }
    return files;
}

}  // namespace scnet
