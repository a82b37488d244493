#include <doctest.h>

#include <cmath>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "scnet/errors.hpp"
#include "scnet/experiment.hpp"
#include "scnet/report.hpp"
#include "temp_dir.hpp"

using namespace scnet;
namespace fs = std::filesystem;

namespace {

MetricReport fake_report(double offset) {
    Mask gt(1, 64, 64);
    FeatureMap prob(1, 64, 64);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt.values()[i] = (i % 5 == 0) ? 1 : 0;
        prob.values()[i] = static_cast<float>(std::fmod(0.13 * static_cast<double>(i) + offset, 1.0));
    }
    const std::vector<EvalImage> images{{prob, gt}};
    return evaluate_predictions(images);
}

}  // namespace

TEST_CASE("metrics and curve files parse back") {
    const MetricReport r = fake_report(0.2);
    const std::string text = std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row("runA", r);
    const auto parsed = parse_metrics_csv(text);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].name == "runA");
    CHECK(parsed[0].report.counts.tp == r.counts.tp);
    CHECK(parsed[0].report.counts.fp == r.counts.fp);
    CHECK(parsed[0].report.pixel.f1 == doctest::Approx(r.pixel.f1).epsilon(1e-9));
    CHECK(parsed[0].report.auprc == doctest::Approx(r.auprc).epsilon(1e-9));
    CHECK(parsed[0].report.threshold == doctest::Approx(r.threshold));

    const auto curves = parse_prc_csv(prc_csv("runA", r.curve) + prc_csv("runB", r.curve, false));
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].first == "runA");
    CHECK(curves[1].first == "runB");
    CHECK(curves[0].second.size() == r.curve.size());

    CHECK_THROWS_AS(parse_metrics_csv("name,f1\nx,0.5\n"), DataError);
    CHECK_THROWS_AS(parse_metrics_csv(std::string(kMetricsCsvHeader) + "\nrunA,notanumber\n"), DataError);
}

TEST_CASE("collect_runs lists every missing curve file") {
    testutil::TempDir dir("collect");
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    write_metric_files(dir / "a", "a", fake_report(0.1));
    write_text_file(dir / "b" / "metrics.csv",
                    std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row("b", fake_report(0.3)));
    try {
        collect_runs(dir.path());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find((dir / "b" / "prc.csv").string()) != std::string::npos);
    }
    testutil::TempDir empty("collect-empty");
    CHECK_THROWS_AS(collect_runs(empty.path()), DataError);
}

TEST_CASE("the report covers k runs with k curves") {
    testutil::TempDir dir("report");
    const int k = 3;
    for (int i = 0; i < k; ++i) {
        const std::string name = "run" + std::to_string(i);
        fs::create_directories(dir / name);
        write_metric_files(dir / name, name, fake_report(0.1 * i));
    }
    const auto runs = collect_runs(dir.path());
    REQUIRE(runs.size() == static_cast<std::size_t>(k));
    for (const auto& r : runs) CHECK_FALSE(r.report.curve.empty());

    const ReportFiles files = write_report(dir.path(), dir / "report");
    const cv::Mat plot = cv::imread(files.plot.string());
    CHECK_FALSE(plot.empty());
    std::ifstream in(files.summary);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == k + 1);
    CHECK(fs::exists(files.breakdown));
    CHECK(files.ablation.empty());
}
